"""Edge-of-stability analysis for gradient descent and sharpness-aware minimization."""

from samedge.objectives import GradientInfo, MlpModel, QuadraticModel, glorot_init
from samedge.optim import OptimConfig, EdgeReport, edge_ratio, gd_edge, gd_step, sam_edge, sam_step
from samedge.spectral import SpectralEstimate, alignment, alignment_pair, operator_norm, top_k_eigs

__version__ = "0.1.0"
