"""Generators for the four reference model systems.

All constructors return fully validated SystemSpec instances (they round-trip
through the document loader).  Energies are in code units with the level
spacing set to 1 where applicable; K plays the role of beta in these units.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArguments
from .model import SystemSpec, load_system

MODEL_NAMES = ("counterexample", "oscillator", "particle_line", "d_level")


def _document(energies, couplings, beta):
    return {
        "energies": [float(x) for x in energies],
        "couplings": [
            {"re": np.real(s).tolist(), "im": np.imag(s).tolist()} for s in couplings
        ],
        "beta": float(beta),
        "bath": {"kind": "glauber", "params": {}},
    }


def make_counterexample(n: int, gamma: float, beta: float = 0.0) -> SystemSpec:
    """Uniform all-to-all coupling against a linear spectrum.

    Energies 1..n and a single coupling with every entry gamma/sqrt(n); its
    operator norm grows only like sqrt(n).  At beta = 0 the classical gap is
    g gamma^2 while the quantum blocks close the gap like g gamma^2 / n
    (g = G(0) = 1/2 for the Glauber bath; gamma = sqrt(2) normalizes
    g gamma^2 = 1).
    """
    if n < 2:
        raise InvalidArguments("counterexample needs n >= 2")
    if gamma == 0.0:
        raise InvalidArguments("gamma must be nonzero")
    s = np.full((n, n), gamma / math.sqrt(n))
    return load_system(_document(np.arange(1, n + 1), [s], beta))


def make_oscillator(d_levels: int, gamma: float, k: float) -> SystemSpec:
    """Truncated harmonic oscillator, position coupling gamma*(a + a^dag).

    Levels 0..d_levels (dimension d_levels + 1), energies n, coupling matrix
    elements |S_ab|^2 = gamma^2 (a delta_{a-1,b} + b delta_{a,b-1}).
    """
    if d_levels < 2:
        raise InvalidArguments("oscillator needs d_levels >= 2")
    if gamma == 0.0:
        raise InvalidArguments("gamma must be nonzero")
    d = d_levels + 1
    s = np.zeros((d, d))
    for n in range(1, d):
        s[n - 1, n] = s[n, n - 1] = gamma * math.sqrt(n)
    return load_system(_document(np.arange(d), [s], k))


def make_particle_line(n: int, gamma: float, g: float = 0.0, k: float = 0.0) -> SystemSpec:
    """Single particle hopping on a line, site-density couplings.

    Spectrum eps_k = 2 cos(k pi / (n+1)) - g (relabeled ascending); one
    coupling per site with matrix elements
    (2 gamma/(n+1)) sin(p pi n0/(n+1)) sin(q pi n0/(n+1)) in the eigenbasis.
    Every Bohr frequency is non-degenerate, so all nu > 0 blocks are 1x1.
    """
    if n < 3:
        raise InvalidArguments("particle line needs n >= 3")
    if gamma == 0.0:
        raise InvalidArguments("gamma must be nonzero")
    ks = np.arange(1, n + 1)
    energies = 2.0 * np.cos(ks * math.pi / (n + 1)) - g
    order = np.argsort(energies)
    energies = energies[order]
    # sin(p pi n0/(n+1)) table, rows relabeled to ascending energies
    sine = np.sin(np.outer(ks, ks) * (math.pi / (n + 1)))[order, :]
    couplings = []
    for site in range(n):
        vec = sine[:, site]
        couplings.append((2.0 * gamma / (n + 1)) * np.outer(vec, vec))
    return load_system(_document(energies, couplings, k))


def make_d_level(d: int, gamma: float, k: float) -> SystemSpec:
    """Ladder with unweighted nearest-neighbor transitions.

    Energies 1..d and S = gamma * sum_n |n+1><n| + |n><n+1|.  All lam_minus
    vanish inside the nu > 0 blocks and only the boundary phi survive, which
    defeats the Gershgorin bound and exercises the tree bound.
    """
    if d < 3:
        raise InvalidArguments("d-level system needs d >= 3")
    if gamma == 0.0:
        raise InvalidArguments("gamma must be nonzero")
    s = np.zeros((d, d))
    for n in range(d - 1):
        s[n, n + 1] = s[n + 1, n] = gamma
    return load_system(_document(np.arange(1, d + 1), [s], k))


def make_model(name: str, size: int, gamma: float, beta: float, g: float = 0.0) -> SystemSpec:
    """Dispatch by model name (CLI entry point)."""
    if name == "counterexample":
        return make_counterexample(size, gamma, beta)
    if name == "oscillator":
        return make_oscillator(size, gamma, beta)
    if name == "particle_line":
        return make_particle_line(size, gamma, g, beta)
    if name == "d_level":
        return make_d_level(size, gamma, beta)
    raise InvalidArguments(f"unknown model {name!r}; choose from {MODEL_NAMES}")
