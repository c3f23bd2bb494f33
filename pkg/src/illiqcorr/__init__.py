"""Power autocorrelations for return series with many zeros.

Returns of illiquid assets are observed as ``r_t = a_t r~_t`` where the
indicator ``a_t`` switches off trading.  Classical autocorrelations of
``|r_t|^delta`` are biased when the trade probability or the variance
drifts over time; the RP and RPV statistics recentre by kernel estimates
of those curves and are tested with a wild bootstrap.
"""

from .bootstrap import BootstrapOutcome, MultiplierDist, WildBootstrapTest, draw_multipliers, run_test
from .core import PowerSeries, PowerSpec, ReturnSeries, build_series, power_transform
from .diagnostics import Profile, absolute_return_profile, probability_profile
from .exceptions import IlliqError
from .harness import ExperimentResult, ExperimentSpec, emit_tables, load_spec, run_experiment
from .kernel import CurveEstimate, KernelConfig, KernelSmoother, estimate_power_moment, estimate_probability, loocv_bandwidth
from .powercorr import (
    AutocorrSet,
    Method,
    PowerAutocorrelation,
    chi2_test,
    classical_autocorr,
    compute_autocorr,
    plugin_variance_rp,
    plugin_variance_rpv,
    portmanteau_stat,
    rp_autocorr,
    rpv_autocorr,
)
from .simulate import DgpConfig, SimulatedPanel, generate, true_curves

__version__ = "0.1.0"

__all__ = [
    "AutocorrSet",
    "BootstrapOutcome",
    "CurveEstimate",
    "DgpConfig",
    "ExperimentResult",
    "ExperimentSpec",
    "IlliqError",
    "KernelConfig",
    "KernelSmoother",
    "Method",
    "MultiplierDist",
    "PowerAutocorrelation",
    "PowerSeries",
    "PowerSpec",
    "Profile",
    "ReturnSeries",
    "SimulatedPanel",
    "WildBootstrapTest",
    "absolute_return_profile",
    "build_series",
    "chi2_test",
    "classical_autocorr",
    "compute_autocorr",
    "draw_multipliers",
    "emit_tables",
    "estimate_power_moment",
    "estimate_probability",
    "generate",
    "load_spec",
    "loocv_bandwidth",
    "plugin_variance_rp",
    "plugin_variance_rpv",
    "portmanteau_stat",
    "power_transform",
    "probability_profile",
    "rp_autocorr",
    "rpv_autocorr",
    "run_experiment",
    "run_test",
    "true_curves",
]
