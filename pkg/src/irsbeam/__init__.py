"""Joint double-IRS phase and hybrid precoder optimization for an
Alamouti-coded mmWave MU-MISO downlink.

The package is organized around the two halves of the optimizer:

- ``joint_opt``: lifted SDP + majorization-minimization with
  difference-of-convex rank penalties, producing IRS phases and a fully
  digital precoder.
- ``hybrid``: alternating factorization of the digital precoder into a
  unit-modulus analog matrix and a low-dimensional digital matrix.

``estimators`` wraps both in a scikit-learn style fit API, and ``bench``
drives Monte-Carlo benchmark sweeps from the command line.
"""

from .config import SystemConfig, validate_config, dbm_to_watt, watt_to_dbm
from .channels import ChannelSet, generate_channels, assemble, perturb
from .alamouti import PhaseConfig, effective_channel, snr, achievable_rate
from .joint_opt import MMSettings, run_first_subproblem, extract_phases, extract_precoder
from .hybrid import PrecoderSet, run_second_subproblem
from .estimators import DoubleIrsBeamformer, HybridPrecoderFactorizer

__all__ = [
    "SystemConfig",
    "validate_config",
    "dbm_to_watt",
    "watt_to_dbm",
    "ChannelSet",
    "generate_channels",
    "assemble",
    "perturb",
    "PhaseConfig",
    "effective_channel",
    "snr",
    "achievable_rate",
    "MMSettings",
    "run_first_subproblem",
    "extract_phases",
    "extract_precoder",
    "PrecoderSet",
    "run_second_subproblem",
    "DoubleIrsBeamformer",
    "HybridPrecoderFactorizer",
]

__version__ = "0.1.0"
