"""Volume-power functionals of random Vietoris-Rips and Čech complexes."""

from .asymptotics import (
    RegimeSpec,
    clt_rate_bound,
    covariance_matrix,
    covariance_prediction,
    expected_functional,
    limiting_sigma,
    normalizer_Q,
    rank_prediction,
)
from .complexes import (
    build_neighbor_graph,
    enumerate_cech_faces,
    enumerate_rips_faces,
    f_vector,
)
from .functionals import AdmissibleSequence, FunctionalSpec, evaluate_sequence
from .geometry import PointCloud, Window, sample_poisson, simplex_volume, unit_ball_volume
from .kernels import COMPILED
from .moments import (
    MomentTable,
    build_table,
    estimate_mu,
    estimate_mu_10,
    estimate_mu_mixed,
    estimate_nu,
    estimate_nu_mixed,
    moment_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleSequence", "COMPILED", "FunctionalSpec", "MomentTable", "PointCloud",
    "RegimeSpec", "Window", "build_neighbor_graph", "build_table", "clt_rate_bound",
    "covariance_matrix", "covariance_prediction", "enumerate_cech_faces",
    "enumerate_rips_faces", "estimate_mu", "estimate_mu_10", "estimate_mu_mixed",
    "estimate_nu", "estimate_nu_mixed", "evaluate_sequence", "expected_functional",
    "f_vector", "limiting_sigma", "moment_matrix", "normalizer_Q", "rank_prediction",
    "sample_poisson", "simplex_volume", "unit_ball_volume",
]
