"""Davies-generator spectral gap bounds, exact oracles and model systems."""

from .errors import *  # noqa: F401,F403
from .model import BathModel, GibbsWeights, SystemSpec, bath_g, gibbs, load_system
from .blocks import (
    BohrIndex,
    DirichletBlock,
    PauliGenerator,
    VarianceBlock,
    all_block_gaps,
    block_exact_gap,
    bohr_index,
    dirichlet_block,
    pauli_generator,
    variance_block,
)
from .liouvillian import (
    Superoperator,
    build_davies,
    detailed_balance_residual,
    evolve_and_track,
    exact_gap,
    fourier_components,
)

__version__ = "0.1.0"
