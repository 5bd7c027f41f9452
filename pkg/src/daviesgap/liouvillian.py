"""Full Davies superoperator, detailed-balance verifier, exact oracles.

Everything here works on the d^2-dimensional vectorization |f> = (f (x) 1)|Omega>
in row-major layout, where the identity |A X B> = (A (x) B^T)|X> holds.  The
generator is kept in the Heisenberg picture; the Schroedinger adjoint is the
matrix conjugate transpose.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import blocks as _blocks
from .errors import DimensionOverflow, InvalidState, NotPrimitive
from .model import GibbsWeights, SystemSpec

DENSE_LIMIT_DEFAULT = 64

# multiplicity of the zero eigenvalue of Q is resolved at this scale
ZERO_CLUSTER_TOL = 1e-10


def dense_limit(default: int = DENSE_LIMIT_DEFAULT) -> int:
    """Dense-oracle cutoff; DAVIES_DENSE_LIMIT overrides."""
    value = os.environ.get("DAVIES_DENSE_LIMIT")
    return int(value) if value else default


@dataclass(eq=False)
class FourierComponents:
    """Coupling operators split by Bohr frequency.

    components[gi][alpha] is S^alpha(omega_gi): the matrix keeping exactly the
    elements S_km with eps_k - eps_m in group gi.  Summing over gi restores
    S^alpha elementwise.
    """

    freqs: np.ndarray
    components: list


def fourier_components(spec: SystemSpec, idx=None) -> FourierComponents:
    """Partition each coupling matrix over Bohr-frequency groups."""
    if idx is None:
        idx = _blocks.bohr_index(spec)
    comps = []
    for gi in range(idx.n_freqs):
        pairs = idx.groups[gi]
        ops = []
        for s in spec.couplings:
            m = np.zeros_like(s)
            # S(omega)_{km} = S_{km} for eps_k - eps_m = omega: (n1, n2) = (m, k)
            m[pairs[:, 1], pairs[:, 0]] = s[pairs[:, 1], pairs[:, 0]]
            ops.append(m)
        comps.append(ops)
    return FourierComponents(freqs=idx.freqs.copy(), components=comps)


@dataclass(eq=False)
class Superoperator:
    """Dense d^2 x d^2 matrix of the Heisenberg-picture generator.

    matrix = hamiltonian + dissipative.  The Hamiltonian part i[H, .] is
    diagonal in the product basis and drops out of both the Dirichlet form and
    the symmetrization Q.
    """

    dim: int
    matrix: np.ndarray
    hamiltonian: np.ndarray
    dissipative: np.ndarray
    picture: str = "heisenberg"

    def q_matrix(self, w: GibbsWeights) -> np.ndarray:
        """Hermitian symmetrization Q = (X + X^dag)/2, X = Gamma^{1/2} L Gamma^{-1/2}.

        For reversible L both terms coincide and Q is similar to the
        dissipative part; the Hamiltonian part cancels exactly between the two
        terms.  The zero mode is Gamma^{1/2}(1), i.e. vectorized sqrt(sigma).
        """
        g = w.pair_matrix().reshape(-1)
        r = np.sqrt(g)
        x = self.matrix * (r[:, None] / r[None, :])
        return 0.5 * (x + x.conj().T)


def build_davies(spec: SystemSpec, limit: int = None) -> Superoperator:
    """Assemble the canonical-form generator from the Fourier components."""
    d = spec.dim
    if limit is None:
        limit = dense_limit()
    if d > limit:
        raise DimensionOverflow(f"d = {d} exceeds dense limit {limit}")
    idx = _blocks.bohr_index(spec)
    gvals = _blocks.bath_values(spec, idx)
    fc = fourier_components(spec, idx)

    eye = np.eye(d)
    diss = np.zeros((d * d, d * d), dtype=complex)
    for gi in range(idx.n_freqs):
        g = gvals[gi]
        for s_om in fc.components[gi]:
            if not np.any(s_om):
                continue
            sdag = s_om.conj().T
            k_op = sdag @ s_om
            term = np.kron(sdag, s_om.T)
            term -= 0.5 * (np.kron(k_op, eye) + np.kron(eye, k_op.T))
            diss += g * term

    ham = 1j * (
        np.kron(np.diag(spec.energies).astype(complex), eye)
        - np.kron(eye, np.diag(spec.energies).astype(complex))
    )
    return Superoperator(dim=d, matrix=ham + diss, hamiltonian=ham, dissipative=diss)


def detailed_balance_residual(sop: Superoperator, w: GibbsWeights) -> float:
    """|| Gamma L - L^dag Gamma ||_F / || Gamma L ||_F for the dissipative part.

    The Hamiltonian part is excluded: only the dissipative part is reversible.
    """
    g = w.pair_matrix().reshape(-1)
    gl = g[:, None] * sop.dissipative
    resid = gl - sop.dissipative.conj().T * g[None, :]
    denom = max(np.linalg.norm(gl), 1e-300)
    return float(np.linalg.norm(resid) / denom)


def dirichlet_matrix(sop: Superoperator, w: GibbsWeights) -> np.ndarray:
    """-(Gamma L + L^dag Gamma)/2 of the dissipative part; Hermitian PSD."""
    g = w.pair_matrix().reshape(-1)
    gl = g[:, None] * sop.dissipative
    return -0.5 * (gl + gl.conj().T)


def variance_matrix(w: GibbsWeights) -> np.ndarray:
    """Matrix of the weighted variance: Gamma - |s><s| with s = vec(diag(sigma))."""
    g = w.pair_matrix().reshape(-1)
    s = np.diag(w.sigma).reshape(-1)
    return np.diag(g) - np.outer(s, s)


def exact_gap(sop: Superoperator, w: GibbsWeights) -> float:
    """Spectral gap from the dense eigendecomposition of Q.

    The zero mode is identified as the eigenvector with maximal overlap with
    vec(sqrt(sigma)) (robust when the gap is tiny); the gap is the smallest of
    the remaining -eigenvalues.  Raises NotPrimitive when the zero eigenvalue
    is degenerate within the cluster tolerance.
    """
    q = sop.q_matrix(w)
    vals, vecs = np.linalg.eigh(q)
    scale = max(1.0, float(np.abs(vals).max()))
    n_zero = int(np.count_nonzero(np.abs(vals) <= ZERO_CLUSTER_TOL * scale))
    if n_zero != 1:
        raise NotPrimitive(f"zero eigenvalue of Q has multiplicity {n_zero}")
    root = np.sqrt(w.sigma)
    fixed = np.diag(root).reshape(-1)
    fixed /= np.linalg.norm(fixed)
    overlaps = np.abs(vecs.conj().T @ fixed)
    zero_pos = int(np.argmax(overlaps))
    rest = np.delete(vals, zero_pos)
    return float(-rest.max())


def _check_state(rho: np.ndarray, d: int):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise InvalidState(f"state shape {rho.shape}, expected {(d, d)}")
    if np.linalg.norm(rho - rho.conj().T) > 1e-10 * max(1.0, np.linalg.norm(rho)):
        raise InvalidState("state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-10:
        raise InvalidState("state trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise InvalidState("state has a negative eigenvalue")
    return rho


def evolve_and_track(sop: Superoperator, rho0, w: GibbsWeights, times):
    """Evolve rho0 under the Schroedinger-picture adjoint; track distances.

    Returns a list of (trace_distance, chi2) pairs, one per requested time.
    The propagator is evaluated through the eigendecomposition of Q conjugated
    back (L is similar to the Hermitian Q for reversible instances), with the
    Hamiltonian phases applied separately; the two parts commute blockwise.
    """
    d = sop.dim
    rho0 = _check_state(rho0, d)
    g = w.pair_matrix().reshape(-1)
    r = np.sqrt(g)
    q = sop.q_matrix(w)
    vals, vecs = np.linalg.eigh(q)
    ham_diag = np.diag(sop.hamiltonian).copy()

    sigma = np.diag(w.sigma).astype(complex)
    v0 = rho0.reshape(-1)
    # L_diss = Gamma^{-1/2} Q Gamma^{1/2}, so the Schroedinger propagator is
    # exp(L*t) = exp(-ham t) Gamma^{1/2} exp(Qt) Gamma^{-1/2}
    y0 = vecs.conj().T @ (v0 / r)
    out = []
    for t in sorted(float(t) for t in times):
        y = np.exp(vals * t) * y0
        v = (vecs @ y) * r
        v = v * np.exp(-ham_diag * t)
        rho_t = v.reshape(d, d)
        rho_t = 0.5 * (rho_t + rho_t.conj().T)
        delta = rho_t - sigma
        evals = np.linalg.eigvalsh(delta)
        trace_dist = float(np.abs(evals).sum())
        chi2 = float(np.real(np.sum(np.abs(delta.reshape(-1)) ** 2 / g)))
        out.append((trace_dist, chi2))
    return out
