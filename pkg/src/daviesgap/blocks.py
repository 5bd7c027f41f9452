"""Bohr-frequency indexing and the block decomposition of the Dirichlet form.

For a non-degenerate spectrum the Dirichlet form E(f,f) = -<f, L(f)>_sigma and
the weighted variance are simultaneously block diagonal over Bohr frequencies
nu, with one block per group of ordered label pairs (n1, n2) sharing
nu = eps_{n2} - eps_{n1}.  The nu = 0 block is the classical Pauli master
equation on populations; the nu != 0 blocks govern coherences.

All bath evaluations go through a shared table of values at the group
representatives, so that block assembly and the full superoperator assembly
are consistent to rounding.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SingularVariance, UnknownFrequency
from .model import GibbsWeights, SystemSpec, bath_g, gibbs

# tol_bohr = BOHR_REL_TOL * (eps_max - eps_min), union-find closure: frequency
# values chained within the tolerance land in one group.
BOHR_REL_TOL = 1e-9


@dataclass(eq=False)
class BohrIndex:
    """Grouping of all d^2 ordered label pairs by Bohr frequency.

    freqs        sorted group representatives (antisymmetric around 0)
    groups       per frequency, (L, 2) int array of pairs (n1, n2) in
                 lexicographic order, with nu = eps_{n2} - eps_{n1}
    diameters    spread of raw frequency values inside each group
    pair_group   d x d int array: group index of the pair (n1, n2)
    zero_index   position of the nu = 0 group
    """

    freqs: np.ndarray
    groups: list
    diameters: np.ndarray
    pair_group: np.ndarray
    zero_index: int
    _lo: np.ndarray = field(repr=False, default=None)
    _hi: np.ndarray = field(repr=False, default=None)

    @property
    def n_freqs(self) -> int:
        return int(self.freqs.size)

    def positive_indices(self):
        """Indices of the nu > 0 groups (ascending)."""
        return list(range(self.zero_index + 1, self.n_freqs))

    def lookup(self, delta: float) -> int:
        """Group index whose frequency band contains `delta`."""
        tol = max(self._lookup_tol, 1e-15 * max(1.0, abs(delta)))
        i = int(np.searchsorted(self.freqs, delta))
        for j in (i - 1, i):
            if 0 <= j < self.freqs.size:
                if self._lo[j] - tol <= delta <= self._hi[j] + tol:
                    return j
        raise UnknownFrequency(f"{delta!r} is not a Bohr frequency of this instance")

    def complements(self, gi: int):
        """Per position i = 1, 2: labels NOT occurring as n_i in the group."""
        d = self.pair_group.shape[0]
        pairs = self.groups[gi]
        all_labels = np.arange(d)
        c1 = np.setdiff1d(all_labels, pairs[:, 0], assume_unique=False)
        c2 = np.setdiff1d(all_labels, pairs[:, 1], assume_unique=False)
        return c1, c2


def bohr_index(spec: SystemSpec) -> BohrIndex:
    """Group the d^2 ordered energy pairs by their Bohr frequency."""
    e = spec.energies
    d = e.size
    vals = np.subtract.outer(e, e).T.ravel()  # vals[n1*d + n2] = e[n2] - e[n1]
    order = np.argsort(vals, kind="stable")
    svals = vals[order]
    tol = BOHR_REL_TOL * spec.span
    # Chain-merge: a gap larger than tol starts a new group.
    breaks = np.nonzero(np.diff(svals) > tol)[0]
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks + 1, [svals.size]))

    group_of_sorted = np.zeros(svals.size, dtype=np.int64)
    for gi, s in enumerate(starts):
        group_of_sorted[s : ends[gi]] = gi
    pair_group_flat = np.empty(svals.size, dtype=np.int64)
    pair_group_flat[order] = group_of_sorted
    pair_group = pair_group_flat.reshape(d, d)

    reps = np.array([svals[s:t].mean() for s, t in zip(starts, ends)])
    lo = svals[starts]
    hi = svals[ends - 1]
    # The pair set is symmetric under reversal, so the group structure is
    # symmetric; enforce exact antisymmetry of the representatives.
    reps = 0.5 * (reps - reps[::-1])

    groups = []
    for s, t in zip(starts, ends):
        flat = np.sort(order[s:t])
        pairs = np.column_stack((flat // d, flat % d))
        groups.append(pairs)

    zero = int(np.searchsorted(reps, 0.0))
    if not (zero < reps.size and abs(reps[zero]) <= tol + 1e-300):
        candidates = np.nonzero(np.abs(reps) <= max(tol, 1e-300))[0]
        zero = int(candidates[0])
    idx = BohrIndex(
        freqs=reps,
        groups=groups,
        diameters=hi - lo,
        pair_group=pair_group,
        zero_index=zero,
        _lo=lo,
        _hi=hi,
    )
    idx._lookup_tol = tol
    return idx


def bath_values(spec: SystemSpec, idx: BohrIndex) -> np.ndarray:
    """G evaluated once per group representative."""
    return np.array([bath_g(spec.bath, float(f), spec.beta) for f in idx.freqs])


def g_matrix(spec: SystemSpec, idx: BohrIndex, gvals=None) -> np.ndarray:
    """d x d matrix Gf[k, m] = G(eps_k - eps_m) at group representatives."""
    if gvals is None:
        gvals = bath_values(spec, idx)
    # pair (n1, n2) = (m, k) carries eps_k - eps_m
    return gvals[idx.pair_group.T]


@dataclass(eq=False)
class DirichletBlock:
    """One Bohr block of the Dirichlet matrix.

    matrix is Hermitian PSD on the block basis (lexicographically ordered
    pairs).  It decomposes exactly as

        matrix = sum_m phi_m |m><m|  +  sum_{i<j} M_{ij},

    where each link matrix M_{ij} has eigenvalues lam_plus / lam_minus with
    eigenvectors (|i> -/+ e^{i theta} |j>)/sqrt(2).  phi carries the diagonal
    weight that cannot be paired inside the block: transitions leaving the
    pair set plus, for unequal coupling diagonals, the G(0) self term.
    """

    nu: float
    basis: np.ndarray  # (L, 2) int
    matrix: np.ndarray  # (L, L) complex
    phi: np.ndarray  # (L,) float
    lam_plus: np.ndarray  # (L, L) float, symmetric, zero diagonal
    lam_minus: np.ndarray
    theta: np.ndarray  # (L, L) float, theta[i, j] = -theta[j, i]
    sigma_pairs: np.ndarray  # (L,) sigma(m1, m2)

    @property
    def size(self) -> int:
        return int(self.basis.shape[0])

    def link(self, i: int, j: int):
        """(lam_plus, lam_minus, theta) for the unordered pair, canonical i < j."""
        a, b = (i, j) if i < j else (j, i)
        return (
            float(self.lam_plus[a, b]),
            float(self.lam_minus[a, b]),
            float(self.theta[a, b]),
        )

    def link_matrix(self, i: int, j: int) -> np.ndarray:
        """The 2x2-supported link matrix M_{ij} embedded in the block space."""
        a, b = (i, j) if i < j else (j, i)
        lp, lm, th = self.link(a, b)
        m = np.zeros((self.size, self.size), dtype=complex)
        h = 0.5 * (lp + lm)
        wmag = 0.5 * (lp - lm)
        w = wmag * cmath.exp(1j * th)
        m[a, a] = h
        m[b, b] = h
        m[b, a] = -w
        m[a, b] = -np.conj(w)
        return m


@dataclass(eq=False)
class VarianceBlock:
    """One Bohr block of the variance matrix.

    nu != 0: diagonal with entries sigma(m1, m2).
    nu == 0: complete-graph Laplacian diag(sigma) - sigma sigma^T, whose
             kernel is the all-ones vector.
    """

    nu: float
    matrix: np.ndarray


def _group_index(idx: BohrIndex, nu: float) -> int:
    return idx.lookup(float(nu))


def _block_context(spec: SystemSpec, idx: BohrIndex, gvals=None):
    """Instance-level arrays shared by all block assemblies."""
    if gvals is None:
        gvals = bath_values(spec, idx)
    gf = g_matrix(spec, idx, gvals)
    s_ops = spec.couplings
    if np.iscomplexobj(s_ops) and not np.any(s_ops.imag):
        s_ops = np.ascontiguousarray(s_ops.real)  # real blocks, cheaper eigensolves
    # re*re + im*im matches the arithmetic of the link cross products bitwise,
    # so lam_minus vanishes exactly on the nu = 0 block
    sw_tot = (s_ops.real**2 + s_ops.imag**2).sum(axis=0)
    gw = gf * sw_tot  # gw[k, m] = G(eps_k - eps_m) Sum_alpha |S_km|^2
    return gvals, gf, s_ops, sw_tot, gw


def dirichlet_block(
    spec: SystemSpec,
    w: GibbsWeights,
    idx: BohrIndex,
    nu: float,
    gvals=None,
    links: bool = True,
    ctx=None,
) -> DirichletBlock:
    """Assemble the Dirichlet block at frequency `nu`.

    links=False skips phi and the link eigenvalue data (exact-oracle sweeps
    only need the matrix); those fields are then None.
    """
    gi = _group_index(idx, nu)
    if ctx is None:
        ctx = _block_context(spec, idx, gvals)
    gvals, gf, s_ops, sw_tot, gw = ctx

    pairs = idx.groups[gi]
    a_lab = pairs[:, 0]
    b_lab = pairs[:, 1]
    spair = np.sqrt(w.sigma[a_lab] * w.sigma[b_lab])

    # full first-term diagonal: 1/2 sum_i sum_k G(eps_k - eps_{m_i}) |S_{m_i k}|^2
    colsum = gw.sum(axis=0)
    diag_full = 0.5 * (colsum[a_lab] + colsum[b_lab]) * spair

    gsub = gf[np.ix_(a_lab, a_lab)]  # gsub[j, i] = G(eps_{a_j} - eps_{a_i})
    s_a = s_ops[:, a_lab[:, None], a_lab[None, :]]  # (alpha, L, L)
    s_b = s_ops[:, b_lab[:, None], b_lab[None, :]]
    cross = (np.conj(s_b) * s_a).sum(axis=0)  # cross[j, i]
    wmat = gsub * spair[None, :] * cross  # wmat[j, i], link direction i -> j

    mat = -wmat
    np.fill_diagonal(mat, diag_full - np.diag(wmat))
    mat = 0.5 * (mat + mat.conj().T)

    phi = lam_plus_s = lam_minus_s = theta_s = None
    if links:
        # phi: transitions into labels outside the per-position sets, plus the
        # G(0) self term from unequal coupling diagonals.
        c1, c2 = idx.complements(gi)
        phi1 = gw[np.ix_(c1, a_lab)].sum(axis=0) if c1.size else np.zeros(len(pairs))
        phi2 = gw[np.ix_(c2, b_lab)].sum(axis=0) if c2.size else np.zeros(len(pairs))
        g0 = gvals[idx.zero_index]
        diag_a = s_ops[:, a_lab, a_lab]
        diag_b = s_ops[:, b_lab, b_lab]
        self_term = 0.5 * g0 * (np.abs(diag_a - diag_b) ** 2).sum(axis=0)
        phi = (0.5 * (phi1 + phi2) + self_term) * spair

        # link eigenvalue data, canonical direction i < j
        h2 = 0.5 * (sw_tot[np.ix_(a_lab, a_lab)] + sw_tot[np.ix_(b_lab, b_lab)])
        hmat = gsub * spair[None, :] * h2
        wabs = np.abs(wmat)
        lam_plus = hmat + wabs
        lam_minus = np.maximum(hmat - wabs, 0.0)
        theta = np.angle(wmat)
        il = np.tril_indices(len(pairs), -1)
        lam_plus_s = np.zeros_like(lam_plus, dtype=float)
        lam_minus_s = np.zeros_like(lam_plus_s)
        theta_s = np.zeros_like(lam_plus_s)
        lam_plus_s[il[1], il[0]] = lam_plus[il]  # at [i, j], i < j, from wmat[j, i]
        lam_plus_s += lam_plus_s.T.copy()
        lam_minus_s[il[1], il[0]] = lam_minus[il]
        lam_minus_s += lam_minus_s.T.copy()
        theta_s[il[1], il[0]] = theta[il]
        theta_s -= theta_s.T.copy()

    return DirichletBlock(
        nu=float(idx.freqs[gi]),
        basis=pairs,
        matrix=mat,
        phi=phi,
        lam_plus=lam_plus_s,
        lam_minus=lam_minus_s,
        theta=theta_s,
        sigma_pairs=spair,
    )


def variance_block(w: GibbsWeights, idx: BohrIndex, nu: float) -> VarianceBlock:
    """Assemble the variance block at frequency `nu`."""
    gi = _group_index(idx, nu)
    pairs = idx.groups[gi]
    rep = float(idx.freqs[gi])
    if gi == idx.zero_index:
        sigma = w.sigma[pairs[:, 0]]
        mat = np.diag(sigma) - np.outer(sigma, sigma)
        return VarianceBlock(nu=rep, matrix=mat)
    spair = np.sqrt(w.sigma[pairs[:, 0]] * w.sigma[pairs[:, 1]])
    return VarianceBlock(nu=rep, matrix=np.diag(spair))


@dataclass(eq=False)
class PauliGenerator:
    """Classical rate equation on populations (the nu = 0 dynamics).

    rates[k, m] = sum_alpha |S_km|^2 G(eps_k - eps_m) is the m -> k rate;
    generator is sum_{km} P(k,m) (|m><m| - |k><m|), so that populations evolve
    under dp/dt = -generator p towards sigma.
    """

    rates: np.ndarray
    generator: np.ndarray

    def spectral_gap(self, w: GibbsWeights) -> float:
        """Gap of the sigma-symmetrized classical generator (independent path)."""
        r = np.sqrt(w.sigma)
        sym = self.generator * (r[None, :] / r[:, None])
        sym = 0.5 * (sym + sym.T)
        vals = np.linalg.eigvalsh(sym)
        return float(vals[1])


def pauli_generator(spec: SystemSpec, w: GibbsWeights, idx: BohrIndex = None) -> PauliGenerator:
    """Fermi-golden-rule rate matrix and the classical generator."""
    if idx is None:
        idx = bohr_index(spec)
    gf = g_matrix(spec, idx)
    s_ops = spec.couplings
    rates = gf * (s_ops.real**2 + s_ops.imag**2).sum(axis=0)
    gen = np.diag(rates.sum(axis=0)) - rates
    return PauliGenerator(rates=rates, generator=gen)


def block_exact_gap(db: DirichletBlock, vb: VarianceBlock) -> float:
    """Smallest generalized eigenvalue of the pencil (E_nu, V_nu) off the kernel.

    For nu = 0 the all-ones direction (shared kernel of both matrices) is
    deflated first.  This is the reciprocal of the exact per-block support
    number.
    """
    if db.nu != vb.nu:
        raise UnknownFrequency(f"block mismatch: {db.nu} vs {vb.nu}")
    e_mat = db.matrix
    v_mat = vb.matrix
    if db.nu == 0.0 or _is_zero_block(vb):
        # Whiten with the pseudo-inverse square root of V after deflating its
        # kernel (the all-ones direction, plus numerically vanishing thermal
        # directions) at a relative threshold; robust for the singular pencil.
        vvals, vvecs = np.linalg.eigh(v_mat)
        keep = vvals > 1e-12 * max(float(vvals.max()), 1e-300)
        white = vvecs[:, keep] / np.sqrt(vvals[keep])
        reduced = white.conj().T @ e_mat @ white
        reduced = 0.5 * (reduced + reduced.conj().T)
        vals = np.linalg.eigvalsh(reduced)
        return float(max(vals[0], 0.0))
    diag = np.real(np.diag(v_mat)).copy()
    if np.any(diag <= 0.0):
        raise SingularVariance("variance block has a non-positive diagonal entry")
    s = 1.0 / np.sqrt(diag)
    white = e_mat * s[:, None] * s[None, :]
    if white.shape[0] == 1:
        return float(max(white[0, 0].real, 0.0))
    vals = scipy.linalg.eigh(
        white,
        eigvals_only=True,
        subset_by_index=[0, 0],
        driver="evr",
        check_finite=False,
        overwrite_a=True,
    )
    return float(max(vals[0], 0.0))


def _is_zero_block(vb: VarianceBlock) -> bool:
    # only the nu = 0 variance block is non-diagonal
    off = vb.matrix - np.diag(np.diag(vb.matrix))
    return bool(np.any(off != 0))


def all_block_gaps(
    spec: SystemSpec, w: GibbsWeights = None, idx: BohrIndex = None
) -> dict:
    """Exact gap of every block with nu >= 0 (negative blocks share spectra)."""
    if w is None:
        w = gibbs(spec)
    if idx is None:
        idx = bohr_index(spec)
    ctx = _block_context(spec, idx)
    gaps = {}
    for gi in range(idx.zero_index, idx.n_freqs):
        nu = float(idx.freqs[gi])
        db = dirichlet_block(spec, w, idx, nu, links=False, ctx=ctx)
        vb = variance_block(w, idx, nu)
        gaps[nu] = block_exact_gap(db, vb)
    return gaps
