"""Critical KPP front shift: expansions, direct simulation and coefficient fits."""
from .constants import MU_STAR, compute_mu
from .errors import KPPError
from .front import FrontShiftFitter, build_uapp, compare_run, fit_constants, fit_shift, matched_outer
from .inner import solve_inner
from .outer import ExpansionLedger, build_v1_plus, build_v2_plus, build_v3_plus, solve_mu_root
from .solver import SimulationConfig, init_step, run, step
from .wave import solve_wave

__all__ = [
    "MU_STAR", "compute_mu", "KPPError", "FrontShiftFitter", "build_uapp", "compare_run", "fit_constants",
    "fit_shift", "matched_outer", "solve_inner", "ExpansionLedger", "build_v1_plus", "build_v2_plus",
    "build_v3_plus", "solve_mu_root", "SimulationConfig", "init_step", "run", "step", "solve_wave",
]
