"""Exact constructions and experiments for approximating the orbit ``alpha**n x``
by the points of a one-dimensional Delone set."""
from .config import config_from_dict, load_config
from .construction import (
    DivergenceSetup,
    ExperimentConfig,
    build_A_n,
    build_A_prime_n,
    choose_J,
    choose_residue,
    delta_Delta,
    divergence_setup,
    y_n_member,
)
from .delone import (
    BeattySet,
    FibonacciChain,
    IntegerLattice,
    JitteredLattice,
    nearest_point,
    points_in_window,
)
from .errors import DeloneApproxError
from .estimators import (
    chung_erdos_ratio,
    density_zoom,
    independence_report,
    intersection_matrix,
    measure_table,
    quasi_independence_constant,
)
from .montecarlo import dichotomy_experiment, sample_hits
from .numerics import IntervalUnion, Numbers, PeriodicUnion
from .psi import partial_sum

__version__ = "0.1.0"
