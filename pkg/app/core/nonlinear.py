"""
Scalar functions behind the two equations.

f(v) = 1 + v - e^v is a bijection of (-inf, 0] onto itself; g is its inverse.
The generalized nonlinearity is H_gen(w) = -lam t (t - 1)^2 with t = e^{g(w)},
the standard one is H_std(w) = lam t (t - 1) with t = e^w.
"""

import math
from enum import Enum
from typing import Tuple, Union

import numpy as np

from app.core.exceptions import NonlinearDomainError

ArrayOrFloat = Union[float, np.ndarray]

# Below this magnitude Newton on f degenerates (f'(0) = 0); use the series instead
_SERIES_CUTOFF = 1e-8
_NEWTON_MAX_ITER = 100


class NonlinearityKind(str, Enum):
    GENERALIZED = "generalized"
    STANDARD = "standard"


def _scalar_or_array(result: np.ndarray, like) -> ArrayOrFloat:
    return float(result) if np.ndim(like) == 0 else result


def f_forward(v: ArrayOrFloat) -> ArrayOrFloat:
    """f(v) = 1 + v - e^v on v <= 0."""
    values = np.asarray(v, dtype=float)
    if np.any(values > 0):
        raise NonlinearDomainError(f"f is only defined on (-inf, 0]; got max {float(values.max())}")
    return _scalar_or_array(values - np.expm1(values), v)


def g_inverse(u: ArrayOrFloat, tol: float = 1e-14) -> ArrayOrFloat:
    """Inverse of f on (-inf, 0], vectorised.

    Safeguarded Newton inside the certified bracket [u - 1, u]; a Newton step
    that leaves the bracket is replaced by bisection. Convergence is measured by
    the residual |f(v) - u| <= tol * max(1, |u|).
    """
    if not tol > 0:
        raise NonlinearDomainError(f"Tolerance must be positive, got {tol}")
    target = np.array(u, dtype=float, ndmin=1)
    if np.any(target > 0) or not np.all(np.isfinite(target)):
        raise NonlinearDomainError("g is only defined on (-inf, 0]")

    result = np.zeros_like(target)
    near_zero = target > -_SERIES_CUTOFF
    # f(v) = -v^2/2 - v^3/6 + ... inverts to v = -s - s^2/6 with s = sqrt(-2u)
    s = np.sqrt(-2.0 * target[near_zero])
    result[near_zero] = -s - s * s / 6.0

    work = ~near_zero
    if np.any(work):
        w = target[work]
        lo = w - 1.0
        hi = w.copy()
        # fixed point v = w - 1 + e^v is accurate far from the origin
        v = np.clip(w - 1.0 + np.exp(w - 1.0), lo, hi)
        threshold = tol * np.maximum(1.0, np.abs(w))
        for _ in range(_NEWTON_MAX_ITER):
            residual = (v - np.expm1(v)) - w
            active = np.abs(residual) > threshold
            if not np.any(active):
                break
            # f is increasing: a negative residual means v lies left of the root
            lo = np.where(residual < 0, np.maximum(lo, v), lo)
            hi = np.where(residual > 0, np.minimum(hi, v), hi)
            slope = -np.expm1(v)
            with np.errstate(divide="ignore", invalid="ignore"):
                candidate = v - residual / slope
            inside = (slope > 0) & (candidate > lo) & (candidate < hi)
            stepped = np.where(inside, candidate, 0.5 * (lo + hi))
            if np.all(stepped[active] == v[active]):
                break
            v = np.where(active, stepped, v)
        result[work] = v
    return _scalar_or_array(result.reshape(np.shape(u)), u)


def _profile(kind: NonlinearityKind, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """H/lam and dH/dw/lam on w <= 0."""
    if kind is NonlinearityKind.GENERALIZED:
        t = np.exp(g_inverse(w))
        t = np.asarray(t, dtype=float)
        return -t * (t - 1.0) ** 2, t * (3.0 * t - 1.0)
    t = np.exp(w)
    return t * (t - 1.0), t * (2.0 * t - 1.0)


def evaluate_nonlinearity(kind: NonlinearityKind, lam: float, w: ArrayOrFloat) -> ArrayOrFloat:
    """H(w) on the closed domain w <= 0 (H(0) = 0), as used by the iteration."""
    kind = NonlinearityKind(kind)
    values = np.array(w, dtype=float, ndmin=1)
    if kind is NonlinearityKind.GENERALIZED and np.any(values > 0):
        raise NonlinearDomainError("Generalized nonlinearity needs w <= 0")
    shape, _ = _profile(kind, values)
    return _scalar_or_array((lam * shape).reshape(np.shape(w)), w)


def nonlinearity_derivative(kind: NonlinearityKind, lam: float, w: ArrayOrFloat) -> ArrayOrFloat:
    """dH/dw: lam t (3t - 1) (generalized) or lam t (2t - 1) (standard)."""
    kind = NonlinearityKind(kind)
    values = np.array(w, dtype=float, ndmin=1)
    if kind is NonlinearityKind.GENERALIZED and np.any(values > 0):
        raise NonlinearDomainError("Generalized nonlinearity needs w <= 0")
    _, slope = _profile(kind, values)
    return _scalar_or_array((lam * slope).reshape(np.shape(w)), w)


def nonlinearity(kind: NonlinearityKind, lam: float, w: ArrayOrFloat) -> ArrayOrFloat:
    """H(w) inside the solution regime w < 0."""
    if not lam > 0:
        raise NonlinearDomainError(f"Coupling must be positive, got {lam}")
    if np.any(np.asarray(w, dtype=float) >= 0):
        raise NonlinearDomainError("Nonlinearity is evaluated only for w < 0")
    return evaluate_nonlinearity(kind, lam, w)


def lipschitz_bound(kind: NonlinearityKind, lam: float) -> float:
    """Upper bound on sup_{w<0} dH/dw: 2 lam (generalized), lam (standard)."""
    return (2.0 if NonlinearityKind(kind) is NonlinearityKind.GENERALIZED else 1.0) * lam


def minimum_ratio(kind: NonlinearityKind) -> float:
    """max |H| / lam over w < 0: 4/27 (generalized) or 1/4 (standard)."""
    return 4.0 / 27.0 if NonlinearityKind(kind) is NonlinearityKind.GENERALIZED else 0.25


def turning_point(kind: NonlinearityKind) -> float:
    """The w where H attains its minimum; H decreases in w to the left of it."""
    if NonlinearityKind(kind) is NonlinearityKind.GENERALIZED:
        # e^{g(w)} = 1/3
        return float(f_forward(-math.log(3.0)))
    return -math.log(2.0)


def analytic_lambda_bound(kind: NonlinearityKind, vortex_count: int, volume: float) -> float:
    """Necessary condition lam >= 4 pi N / (|V| min_ratio): 27 pi N/|V| or 16 pi N/|V|."""
    return 4.0 * math.pi * vortex_count / (volume * minimum_ratio(kind))
