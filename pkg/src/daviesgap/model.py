"""Problem instances: spectra, couplings, bath spectral functions, Gibbs weights.

A SystemSpec is the full problem statement: a strictly ascending non-degenerate
spectrum, Hermitian coupling operators written in the energy eigenbasis, an
inverse temperature beta, and a bath model supplying the spectral function
G(omega).

Conventions. The bath function is taken to satisfy

    G(omega) = exp(-beta * omega) * G(-omega),

the convention under which the assembled generator passes the numerical
detailed-balance check (the verifier in `liouvillian` is the arbiter).  The
Glauber form G(omega) = 1/(1 + exp(beta*omega)) satisfies it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSpectrum,
    EmptyCouplings,
    MalformedDocument,
    MissingBathFrequency,
    NonHermitianCoupling,
    UnknownBathKind,
)

# Relative Frobenius tolerance for coupling Hermiticity.
HERMITICITY_RTOL = 1e-12

# tol_deg = DEGENERACY_REL_TOL * (eps_max - eps_min); closer energies are
# rejected as degenerate rather than silently merged.
DEGENERACY_REL_TOL = 1e-9

BATH_KINDS = ("glauber", "custom-tabulated")


@dataclass(eq=False)
class BathModel:
    """Bath spectral function G(omega).

    kind "glauber":          G(omega) = 1 / (1 + exp(beta*omega)), bounded by 1.
    kind "custom-tabulated": params maps frequency -> value; evaluated only at
                             the tabulated frequencies (no interpolation).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in BATH_KINDS:
            raise UnknownBathKind(f"unknown bath kind {self.kind!r}")
        if self.kind == "custom-tabulated":
            try:
                freqs = np.array([float(k) for k in self.params], dtype=float)
                vals = np.array([float(v) for v in self.params.values()], dtype=float)
            except (TypeError, ValueError) as exc:
                raise MalformedDocument(f"bad bath table: {exc}") from None
            order = np.argsort(freqs)
            self._tab_freqs = freqs[order]
            self._tab_vals = vals[order]

    def lookup(self, omega: float) -> float:
        """Tabulated value at `omega`, matched within a small tolerance."""
        freqs = self._tab_freqs
        if freqs.size == 0:
            raise MissingBathFrequency(f"empty bath table, requested G({omega})")
        i = int(np.searchsorted(freqs, omega))
        best = min(
            (j for j in (i - 1, i) if 0 <= j < freqs.size),
            key=lambda j: abs(freqs[j] - omega),
        )
        atol = 1e-9 * max(1.0, abs(omega))
        if abs(freqs[best] - omega) > atol:
            raise MissingBathFrequency(f"no tabulated bath value at omega={omega!r}")
        return float(self._tab_vals[best])


def bath_g(model: BathModel, omega: float, beta: float) -> float:
    """Evaluate G(omega) for the given bath model.

    The Glauber branch is computed in overflow-safe form: for beta*omega >> 1
    it underflows gracefully to exp(-beta*omega) instead of overflowing.
    """
    if model.kind == "glauber":
        x = beta * omega
        if x >= 0.0:
            e = math.exp(-x)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(x))
    if model.kind == "custom-tabulated":
        return model.lookup(omega)
    raise UnknownBathKind(f"unknown bath kind {model.kind!r}")


@dataclass(eq=False)
class SystemSpec:
    """Validated problem instance.

    energies   strictly ascending, shape (d,)
    couplings  complex array, shape (n_alpha, d, d), each slice Hermitian
    beta       inverse temperature, >= 0
    bath       bath model shared by all couplings
    """

    energies: np.ndarray
    couplings: np.ndarray
    beta: float
    bath: BathModel

    @property
    def dim(self) -> int:
        return int(self.energies.size)

    @property
    def n_couplings(self) -> int:
        return int(self.couplings.shape[0])

    @property
    def span(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    @property
    def tol_deg(self) -> float:
        return DEGENERACY_REL_TOL * self.span

    def to_document(self) -> dict:
        """Round-trip back to the JSON-compatible input schema."""
        return {
            "energies": [float(e) for e in self.energies],
            "couplings": [
                {"re": s.real.tolist(), "im": s.imag.tolist()} for s in self.couplings
            ],
            "beta": float(self.beta),
            "bath": {"kind": self.bath.kind, "params": dict(self.bath.params)},
        }


def _parse_coupling(entry, d, index):
    if not isinstance(entry, dict) or "re" not in entry or "im" not in entry:
        raise MalformedDocument(
            f"coupling {index}: expected an object with 're' and 'im' arrays"
        )
    try:
        re = np.asarray(entry["re"], dtype=float)
        im = np.asarray(entry["im"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(f"coupling {index}: {exc}") from None
    if re.shape != (d, d) or im.shape != (d, d):
        raise MalformedDocument(
            f"coupling {index}: shape {re.shape}/{im.shape}, expected {(d, d)}"
        )
    return re + 1j * im


def load_system(document) -> SystemSpec:
    """Parse and validate an instance document (dict or JSON text).

    Raises DegenerateSpectrum, NonHermitianCoupling, EmptyCouplings or
    MalformedDocument; the bath model may raise UnknownBathKind or, for
    tabulated baths, MissingBathFrequency when some Bohr frequency of the
    instance is not covered.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise MalformedDocument("top level must be an object")
    missing = {"energies", "couplings", "beta", "bath"} - set(document)
    if missing:
        raise MalformedDocument(f"missing keys: {sorted(missing)}")

    try:
        energies = np.asarray(document["energies"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(f"energies: {exc}") from None
    if energies.ndim != 1 or energies.size < 2 or not np.all(np.isfinite(energies)):
        raise MalformedDocument("energies must be a finite 1-d array with d >= 2")
    d = energies.size

    gaps = np.diff(energies)
    span = float(energies.max() - energies.min())
    tol = DEGENERACY_REL_TOL * span
    if np.any(gaps < -tol):
        raise MalformedDocument("energies must be strictly ascending")
    if np.any(gaps <= tol):
        k = int(np.argmin(gaps))
        raise DegenerateSpectrum(
            f"energies {k} and {k + 1} within degeneracy tolerance {tol:.3e}"
        )

    raw = document["couplings"]
    if not isinstance(raw, list) or len(raw) == 0:
        raise EmptyCouplings("at least one coupling operator is required")
    couplings = np.array([_parse_coupling(c, d, i) for i, c in enumerate(raw)])
    for i, s in enumerate(couplings):
        dev = np.linalg.norm(s - s.conj().T)
        scale = max(np.linalg.norm(s), 1e-300)
        if dev > HERMITICITY_RTOL * scale:
            raise NonHermitianCoupling(
                f"coupling {i}: Hermiticity deviation {dev / scale:.3e}"
            )
    off = couplings.copy()
    off[:, np.arange(d), np.arange(d)] = 0.0
    if not np.any(off != 0):
        raise EmptyCouplings("no coupling has an off-diagonal element")

    try:
        beta = float(document["beta"])
    except (TypeError, ValueError) as exc:
        raise MalformedDocument(f"beta: {exc}") from None
    if not math.isfinite(beta) or beta < 0.0:
        raise MalformedDocument("beta must be finite and non-negative")

    bath_doc = document["bath"]
    if not isinstance(bath_doc, dict) or "kind" not in bath_doc:
        raise MalformedDocument("bath must be an object with a 'kind'")
    bath = BathModel(str(bath_doc["kind"]), dict(bath_doc.get("params", {})))

    spec = SystemSpec(energies=energies, couplings=couplings, beta=beta, bath=bath)
    _validate_bath_values(spec)
    return spec


def _validate_bath_values(spec):
    """G must be positive (and <= 1 for glauber) at every Bohr frequency."""
    diffs = np.unique(np.subtract.outer(spec.energies, spec.energies).ravel())
    gmax = 1.0 if spec.bath.kind == "glauber" else math.inf
    for omega in diffs:
        g = bath_g(spec.bath, float(omega), spec.beta)
        if not (0.0 < g <= gmax) or not math.isfinite(g):
            raise MalformedDocument(
                f"bath value G({omega}) = {g} outside (0, {gmax}]"
            )


@dataclass(eq=False)
class GibbsWeights:
    """Gibbs stationary weights sigma_k ~ exp(-beta * eps_k), normalized."""

    sigma: np.ndarray
    log_z: float
    sigma_min: float

    def pair(self, a: int, b: int) -> float:
        """sigma(a,b) = sqrt(sigma_a * sigma_b), the eigenvalue of Gamma_sigma."""
        return math.sqrt(self.sigma[a] * self.sigma[b])

    def pair_matrix(self) -> np.ndarray:
        """d x d matrix of sigma(a,b), same arithmetic path as pair()."""
        return np.sqrt(np.outer(self.sigma, self.sigma))


def gibbs(spec: SystemSpec) -> GibbsWeights:
    """Stationary weights, computed in log-domain shifted by eps_min."""
    shifted = spec.beta * (spec.energies - spec.energies[0])
    w = np.exp(-shifted)
    z = float(w.sum())
    sigma = w / z
    log_z = math.log(z) - spec.beta * float(spec.energies[0])
    return GibbsWeights(sigma=sigma, log_z=log_z, sigma_min=float(sigma.min()))
