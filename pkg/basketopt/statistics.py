#!/usr/bin/env python3
"""
Summary statistics for BasketOptimizer studies
Standard error of the sample SD, normal confidence intervals and MCSE of run summaries
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm

from .errors import DomainError

NORMAL_975 = float(norm.ppf(0.975))


@dataclass(frozen=True)
class SdStats:
    """Sample SD with its correction factor and unbiased standard error"""
    n: int
    s: float
    c_n: float
    se_unbiased: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def correction_factor(n: int) -> float:
    """c_n = Gamma((n-1)/2) / Gamma(n/2) * sqrt((n-1)/2)"""
    if n < 2:
        raise DomainError(f"Correction factor needs n >= 2, got {n}")
    return math.exp(gammaln((n - 1) / 2.0) - gammaln(n / 2.0)) * math.sqrt((n - 1) / 2.0)


def se_of_sd(s: float, n: int) -> SdStats:
    """Unbiased standard error of a sample standard deviation s from n observations"""
    if n < 2:
        raise DomainError(f"Standard error of the SD needs n >= 2, got {n}")
    if s < 0 or not math.isfinite(s):
        raise DomainError(f"Sample SD must be finite and nonnegative, got {s}")
    c_n = correction_factor(n)
    return SdStats(n=n, s=float(s), c_n=c_n, se_unbiased=float(s) * math.sqrt(c_n * c_n - 1.0))


def summarize(values: Sequence[float]) -> Dict[str, Any]:
    """Mean, SD, range and normal 95% CI with MCSE of the mean and of the SD"""
    data = np.asarray([v for v in values if v is not None], dtype=float)
    count = int(data.size)
    summary: Dict[str, Any] = {"n": count}
    if count == 0:
        return summary
    summary.update(mean=float(data.mean()), min=float(data.min()), max=float(data.max()))
    if count >= 2:
        sd = float(data.std(ddof=1))
        half_width = NORMAL_975 * sd / math.sqrt(count)
        summary.update(
            sd=sd,
            ci_low=summary["mean"] - half_width,
            ci_high=summary["mean"] + half_width,
            mcse_mean=sd / math.sqrt(count),
            mcse_sd=se_of_sd(sd, count).se_unbiased,
        )
    return summary
