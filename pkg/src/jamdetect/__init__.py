"""GLRT jamming detection on unused pilots of a massive-MIMO uplink."""
__version__ = "0.1.0"

from .analysis import (  # noqa: E402
    pc_asymptotic,
    pc_exact,
    pfa_asymptotic,
    pfa_exact,
    threshold_for_pfa,
)
from .detector import DetectorConfig, detect, ml_estimate, mu_prime_from_mu  # noqa: E402
from .model import SystemConfig, make_pilot_book, simulate_observations  # noqa: E402
from .montecarlo import Scenario, run_trials  # noqa: E402

__all__ = [
    "DetectorConfig",
    "Scenario",
    "SystemConfig",
    "detect",
    "make_pilot_book",
    "ml_estimate",
    "mu_prime_from_mu",
    "pc_asymptotic",
    "pc_exact",
    "pfa_asymptotic",
    "pfa_exact",
    "run_trials",
    "simulate_observations",
    "threshold_for_pfa",
]
