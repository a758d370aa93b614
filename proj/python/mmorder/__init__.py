"""Moment estimators, monotonicity checks and Monte Carlo order tests."""

import json as _json

from ._core import (  # noqa: F401
    CatalogError,
    DomainError,
    Error,
    Family,
    InvalidInput,
    MomentSpec,
    NumericError,
    catalog_names,
    check_disp,
    check_logconcave,
    check_lr,
    check_st,
    check_tp2,
    check_tpr_minors,
    empirical_lr,
    empirical_st,
    exp_family_mean_T,
    exp_family_var_T,
    mle_residual,
    run_cli,
    scale_estimate,
    second_order_check,
    sign_changes,
    spacings,
    specfun,
    variance_from_spacings,
)

__version__ = "1.0.0"


def cli_json(*args):
    """Run a CLI command and decode its JSON document.

    Returns (exit_code, document). Errors come back as {"error": {...}}.
    """
    code, out, err = run_cli([str(a) for a in args])
    text = out if out.strip() else err
    return code, _json.loads(text)
