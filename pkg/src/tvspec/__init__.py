"""Data-adaptive estimation of time-varying spectral densities.

Pipeline: simulate (or ingest) a series, compute its pre-periodogram on the
time-frequency grid, then either smooth it with fixed bandwidths or run the
adaptive iteration that grows each grid point's smoothing kernel as far as
the data allows.  Evaluation helpers reproduce squared-error comparisons
against closed-form truths and an oracle global-bandwidth benchmark.
"""

__version__ = "0.1.0"

# raw container format version is embedded in the CLI version string
RAW_FORMAT = "TVSPEC01"

from .adaptive import (EstimatorConfig, RunResult, reconstruct_kernel,  # noqa: F401,E402
                       run_adaptive)
from .preperiodogram import (RawGrid, RawPlane, periodogram,  # noqa: F401,E402
                             preperiodogram_classic, preperiodogram_modified)
from .simulate import ModelSpec, TimeSeries, generate, true_spectrum  # noqa: F401,E402
from .smoother import EstimationGrid, Plane, smooth_nonadaptive  # noqa: F401,E402
