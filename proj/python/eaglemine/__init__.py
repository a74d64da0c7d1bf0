"""Graph micro-cluster mining on log-log feature histograms.

The heavy lifting lives in the compiled ``_core`` module; this package
re-exports its public names.
"""

from ._core import (  # noqa: F401
    AD_CRITICAL_1PC,
    LABEL_EMPTY,
    LABEL_OUTLIER,
    OUTLIER_PROBABILITY,
    DegenerateError,
    Graph,
    Histogram,
    ParseError,
    StructuralError,
    ad_statistic,
    build_histogram,
    bvn_cdf,
    cell_probability,
    degrees,
    elias_gamma_length,
    elias_signed_length,
    fit_single,
    histogram_from_heights,
    hubness_authority,
    load_edge_list,
    log_bucketize,
    mine,
    pagerank,
    summary_mdl,
    triangles,
)

__all__ = [
    "AD_CRITICAL_1PC",
    "LABEL_EMPTY",
    "LABEL_OUTLIER",
    "OUTLIER_PROBABILITY",
    "DegenerateError",
    "Graph",
    "Histogram",
    "ParseError",
    "StructuralError",
    "ad_statistic",
    "build_histogram",
    "bvn_cdf",
    "cell_probability",
    "degrees",
    "elias_gamma_length",
    "elias_signed_length",
    "fit_single",
    "histogram_from_heights",
    "hubness_authority",
    "load_edge_list",
    "log_bucketize",
    "mine",
    "pagerank",
    "summary_mdl",
    "triangles",
]

__version__ = "0.1.0"
