"""Boundary crossing probabilities and run lengths for moving sums of normals."""

from .core import (
    HorizonSpec,
    ProcessSpec,
    ThresholdPair,
    correlation,
    h_from_threshold,
    moving_sums,
    standardize,
    threshold_from_h,
)
from .brownian import RHO, SlopedBoundary, bcp_sloped, siegmund_rho, siegmund_rho_numeric
from .bcp_short import cda_bcp_short, cda_explicit, diffusion_bcp_short, durbin_bcp, pch_bcp, q_conditional
from .bcp_long import KernelSpec, cda_bcp_long, diffusion_bcp_long, kernel, lambda_hat, lambda_quadrature
from .arl import PassageDistribution, arl_cda, glaz_arl, glaz_bcp, passage_cdf
from .estimates import ArlEstimate, BcpEstimate
from .mc import MCConfig, simulate_arl, simulate_bcp, simulate_passage
from .errors import (
    ConvergenceFailure,
    DegenerateEstimate,
    DomainError,
    InvalidInput,
    MovsumError,
    RangeError,
    SingularInput,
    UnsupportedTolerance,
)

__version__ = "0.1.0"
