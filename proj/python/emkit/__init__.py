"""EM estimators: ABO gene counting, sib-pair IBD sharing, OOPS motif
discovery and diffusion-battery deconvolution."""

from ._core import (
    EmError,
    ParseError,
    __version__,
    abo_log_likelihood,
    assert_monotone,
    consensus,
    discover_motif,
    fit_abo,
    fit_deconv,
    fit_ibd,
    histogram_csv,
    ibd_kernel,
    run,
)

__all__ = [
    "EmError",
    "ParseError",
    "__version__",
    "abo_log_likelihood",
    "assert_monotone",
    "consensus",
    "discover_motif",
    "fit_abo",
    "fit_deconv",
    "fit_ibd",
    "histogram_csv",
    "ibd_kernel",
    "run",
]
