"""Coverage and narrowness of estimated bounds against ground truth."""

from __future__ import annotations

import math

UNDEFINED = float("nan")


def point_coverage(est_lower: float, est_upper: float, truth: float,
                   sigma_lower: float = 0.0, sigma_upper: float = 0.0) -> int:
    """1 if the truth lies in the bootstrap-widened closed interval."""
    return int(est_lower - sigma_lower <= truth <= est_upper + sigma_upper)


def _overlap(a_lo, a_hi, b_lo, b_hi) -> float:
    return max(0.0, min(a_hi, b_hi) - max(a_lo, b_lo))


def bound_coverage(true_l: float, true_u: float, est_l: float, est_u: float) -> float:
    """Fraction of the true interval's length covered by the estimated one."""
    if true_l > true_u or est_l > est_u:
        raise ValueError("intervals must satisfy lower <= upper")
    width = true_u - true_l
    if width == 0:
        return 1.0 if est_l <= true_l <= est_u else 0.0
    return _overlap(true_l, true_u, est_l, est_u) / width


def bound_narrowness(true_l: float, true_u: float, est_l: float, est_u: float) -> float:
    """Estimated width over the overlap width, floored at 1; NaN when they do not overlap."""
    if true_l > true_u or est_l > est_u:
        raise ValueError("intervals must satisfy lower <= upper")
    inter = _overlap(true_l, true_u, est_l, est_u)
    if inter == 0:
        if true_l == true_u and est_l == est_u == true_l:
            return 1.0
        return UNDEFINED
    return max(1.0, (est_u - est_l) / inter)


def is_undefined(value: float) -> bool:
    return isinstance(value, float) and math.isnan(value)
