"""High-precision q-series evaluation and numerical verification of q-series identities."""

__version__ = "0.1.0"

from .kernel import (  # noqa: E402
    DomainError,
    PoleError,
    PrecisionContext,
    QSeriesError,
    default_context,
    make_context,
    root_of_unity,
)
from .pochhammer import SeriesValue, poch_finite, poch_infinite, poch_multi  # noqa: E402
from .series import eval_1psi1, eval_2phi1, eval_A, eval_B, eval_F, ramanujan_A  # noqa: E402
from .catalog import instantiate, registry  # noqa: E402
from .verify import check_case, run_suite  # noqa: E402

__all__ = [
    "DomainError", "PoleError", "PrecisionContext", "QSeriesError", "default_context",
    "make_context", "root_of_unity", "SeriesValue", "poch_finite", "poch_infinite", "poch_multi",
    "eval_1psi1", "eval_2phi1", "eval_A", "eval_B", "eval_F", "ramanujan_A",
    "instantiate", "registry", "check_case", "run_suite",
]
