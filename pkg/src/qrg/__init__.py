"""Generalized robustness and channel-discrimination games.

Solve robustness programs with certified duality gaps, compile the dual
witnesses into explicit discrimination games, and run seeded certification
campaigns.
"""

from .channels import CPMap, Measurement, SubchannelCollection
from .constructions import (
    compile_appc_game,
    compile_appc_subchannels,
    compile_divergence,
    compile_thm1,
    extract_gamma,
)
from .errors import (
    ArgumentError,
    ConstructionError,
    CovarianceError,
    DegenerateWitnessError,
    InstanceTooLargeError,
    NumericalError,
    PreconditionError,
    QRGError,
)
from .freesets import CFlexibleFreeSet, PolytopeFreeSet, in_S_T, support_space
from .games import (
    ChannelEnsemble,
    GroupAction,
    covariance_check,
    cyclic_action,
    optimal_success,
    success_probability,
    sup_over_free,
    symmetrize_measurement,
)
from .solvers import (
    DiscriminationCertificate,
    InfiniteRobustness,
    RobustnessCertificate,
    min_error_discrimination,
    robustness,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "CFlexibleFreeSet",
    "CPMap",
    "ChannelEnsemble",
    "ConstructionError",
    "CovarianceError",
    "DegenerateWitnessError",
    "DiscriminationCertificate",
    "GroupAction",
    "InfiniteRobustness",
    "InstanceTooLargeError",
    "Measurement",
    "NumericalError",
    "PolytopeFreeSet",
    "PreconditionError",
    "QRGError",
    "RobustnessCertificate",
    "SubchannelCollection",
    "compile_appc_game",
    "compile_appc_subchannels",
    "compile_divergence",
    "compile_thm1",
    "covariance_check",
    "cyclic_action",
    "extract_gamma",
    "in_S_T",
    "min_error_discrimination",
    "optimal_success",
    "robustness",
    "success_probability",
    "sup_over_free",
    "support_space",
    "symmetrize_measurement",
]
