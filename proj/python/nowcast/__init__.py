"""Walk-forward GDP nowcasting core (C++ bindings)."""

from nowcast._core import (
    ConfigError,
    DataError,
    NumericError,
    adf_test,
    aggregate_monthly,
    ar_forecast,
    combine_ewa,
    combine_meta_ewa,
    combine_sa,
    combine_wa,
    deflate_and_growth,
    enet_fit,
    giacomini_white,
    lasso_fit,
    ljung_box,
    mcs,
    metrics,
    pca_decompose,
    pcr_fit,
    plan_walk_forward,
    pls_fit,
    rf_fit_predict,
    ridge_fit,
    rw_forecast,
    shapiro_wilk,
    spearman,
    xgb_fit_predict,
)
from nowcast._core import __version__

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "adf_test",
    "aggregate_monthly",
    "ar_forecast",
    "combine_ewa",
    "combine_meta_ewa",
    "combine_sa",
    "combine_wa",
    "deflate_and_growth",
    "enet_fit",
    "giacomini_white",
    "lasso_fit",
    "ljung_box",
    "mcs",
    "metrics",
    "pca_decompose",
    "pcr_fit",
    "plan_walk_forward",
    "pls_fit",
    "rf_fit_predict",
    "ridge_fit",
    "rw_forecast",
    "shapiro_wilk",
    "spearman",
    "xgb_fit_predict",
    "__version__",
]
