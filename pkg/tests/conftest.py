import numpy as np
import pytest

from daviesgap.model import load_system


def random_document(rng, d, beta, n_alpha=2, ladder=False, spread=0.4):
    """Random valid instance document.

    ladder=True uses integer-spaced energies so that Bohr frequencies are
    degenerate and the nu > 0 blocks become multi-dimensional.
    """
    if ladder:
        energies = np.arange(d, dtype=float)
    else:
        energies = np.sort(rng.uniform(0.0, 1.0, d)) + np.arange(d) * rng.uniform(
            0.2, 0.2 + spread
        )
    couplings = []
    for _ in range(n_alpha):
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        s = 0.5 * (x + x.conj().T)
        couplings.append({"re": s.real.tolist(), "im": s.imag.tolist()})
    return {
        "energies": energies.tolist(),
        "couplings": couplings,
        "beta": float(beta),
        "bath": {"kind": "glauber", "params": {}},
    }


def random_spec(rng, d, beta, n_alpha=2, ladder=False):
    return load_system(random_document(rng, d, beta, n_alpha=n_alpha, ladder=ladder))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
