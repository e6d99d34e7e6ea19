import numpy as np
import pandas as pd
from scipy import stats as scipy_stats
from statsmodels.stats.proportion import proportion_confint


def wilson_interval(successes, n, alpha=0.05):
    """
    Wilson score interval for a success proportion.

    Returns:
        (low, high); (nan, nan) when n is 0
    """
    if n == 0:
        return float("nan"), float("nan")
    low, high = proportion_confint(int(successes), int(n), alpha=alpha, method="wilson")
    return float(low), float(high)


def summarize_over_seeds(rates: pd.DataFrame, by, value="success_rate"):
    """
    Mean and sample std (ddof=1) of ``value`` over seeds for every group.

    Args:
        rates: One row per (group..., seed)
        by: Grouping columns
    """
    grouped = rates.groupby(by, sort=True)[value]
    out = grouped.agg(mean="mean", std=lambda s: s.std(ddof=1), n_seeds="count",
                      min="min", max="max")
    return out.reset_index()


def paired_difference(rates: pd.DataFrame, left: str, right: str, on="seed",
                      column="mode", value="success_rate"):
    """
    Per-seed difference left - right between two groups of ``column``.

    Returns:
        Series indexed by ``on``; seeds missing from either side are dropped
    """
    wide = rates.pivot_table(index=on, columns=column, values=value)
    if left not in wide or right not in wide:
        return pd.Series(dtype=float)
    return (wide[left] - wide[right]).dropna()


def compute_summary_stats(series):
    """
    Compute summary statistics of a numeric series.

    Returns:
        Dictionary with statistics
    """
    clean = pd.Series(series, dtype=float).dropna()
    return {
        'count': int(len(clean)),
        'mean': float(clean.mean()) if len(clean) else float("nan"),
        'std': float(clean.std(ddof=1)) if len(clean) > 1 else float("nan"),
        'min': float(clean.min()) if len(clean) else float("nan"),
        'max': float(clean.max()) if len(clean) else float("nan"),
        'median': float(clean.median()) if len(clean) else float("nan"),
        'sem': float(scipy_stats.sem(clean)) if len(clean) > 1 else float("nan"),
    }


def ordering_holds(means: dict, order):
    """True when means[order[0]] >= means[order[1]] >= ... (missing keys fail)."""
    try:
        values = [means[k] for k in order]
    except KeyError:
        return False
    return bool(np.all(np.diff(values) <= 0))
