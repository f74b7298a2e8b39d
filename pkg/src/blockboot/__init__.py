"""Block bootstrap inference for dependent functional time series."""

__version__ = "0.1.0"

from .bootstrap import (
    BlockPlan,
    BootstrapDistribution,
    block_length_schedule,
    bootstrap_distribution,
    bootstrap_mean_statistic,
    bootstrap_quantile,
    bootstrap_replicate,
    draw_bootstrap_sample,
    long_run_covariance_projection,
    long_run_variance_estimate,
    two_sample_test,
)
from .generators import ProcessConfig, generate_functional, generate_real
from .hilbert import (
    GridFunction,
    HilbertSample,
    centered_block_sum,
    inner_product,
    norm,
    sample_mean,
    trapezoid_weights,
)
from .io import read_sample, write_sample
from .rng import derive_stream
from .vmstat import (
    CvmSpec,
    Kernel,
    bootstrap_cvm_statistic,
    bootstrap_v_statistic,
    cvm_kernel,
    cvm_statistic,
    cvm_test,
    degeneracy_diagnostic,
    empirical_cdf,
    gaussian_kernel,
    make_cvm_spec,
    product_kernel,
    u_statistic,
    v_statistic,
    vstat_test,
)

__all__ = [
    "__version__",
    "BlockPlan",
    "BootstrapDistribution",
    "CvmSpec",
    "GridFunction",
    "HilbertSample",
    "Kernel",
    "ProcessConfig",
    "block_length_schedule",
    "bootstrap_cvm_statistic",
    "bootstrap_distribution",
    "bootstrap_mean_statistic",
    "bootstrap_quantile",
    "bootstrap_replicate",
    "bootstrap_v_statistic",
    "centered_block_sum",
    "cvm_kernel",
    "cvm_statistic",
    "cvm_test",
    "degeneracy_diagnostic",
    "derive_stream",
    "draw_bootstrap_sample",
    "empirical_cdf",
    "gaussian_kernel",
    "generate_functional",
    "generate_real",
    "inner_product",
    "long_run_covariance_projection",
    "long_run_variance_estimate",
    "make_cvm_spec",
    "norm",
    "product_kernel",
    "read_sample",
    "sample_mean",
    "trapezoid_weights",
    "two_sample_test",
    "u_statistic",
    "v_statistic",
    "vstat_test",
    "write_sample",
]
