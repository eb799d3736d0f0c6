"""
Collective damping and dipole-dipole shift of two identical emitters.

With x = 2 pi r12 / lambda and a = mu_hat . r_hat,

    gamma12 / gamma = 3/2 { (1 - a^2) sin x / x
                            + (1 - 3 a^2) (cos x / x^2 - sin x / x^3) }

    Omega12 / gamma = 3/4 { -(1 - a^2) cos x / x
                            + (1 - 3 a^2) (sin x / x^2 + cos x / x^3) }

gamma12 -> gamma as x -> 0 and both rates vanish in the far field.
Omega12 diverges like 1/x^3 at small separation.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .core import CollectiveParams, DipoleOrientation, PhysicalConfig
from .errors import DomainError

#: Below this x the cancelling combination cos x/x^2 - sin x/x^3 is summed as a series.
#: The direct form loses ~ulp/x^2 absolute; six terms are exact to ~1e-19 at x = 0.1.
SERIES_CUTOFF = 0.1
#: Below this x the small-separation limits are returned and Omega12 is flagged divergent.
DIVERGENCE_CUTOFF = 1e-6
_SERIES_TERMS = 6


def _sinc(x):
    # sin x / x; np.sinc is normalised by pi
    return np.sinc(np.asarray(x) / np.pi)


def _near_field_combination(x):
    """cos x / x^2 - sin x / x^3, with a Taylor series below SERIES_CUTOFF.

    Series: sum_{n>=1} (-1)^n 2n x^(2n-2) / (2n+1)!  = -1/3 + x^2/30 - ...
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.cos(x) / x**2 - np.sin(x) / x**3
    small = x < SERIES_CUTOFF
    if np.any(small):
        xs = x[small] if x.ndim else x
        series = np.zeros_like(xs)
        for n in range(_SERIES_TERMS, 0, -1):
            series = series + (-1) ** n * 2 * n * xs ** (2 * n - 2) / math.factorial(2 * n + 1)
        if x.ndim:
            direct = direct.copy()
            direct[small] = series
        else:
            direct = series
    return direct


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("dimensionless separation x = 2 pi r12/lambda must be finite and > 0")
    return x


def gamma12_ratio(x, alignment: float = 1.0):
    """gamma12 / gamma as a function of x = k r12 (vectorised over ``x``)."""
    x = _check_x(x)
    a2 = alignment * alignment
    out = 1.5 * ((1 - a2) * _sinc(x) + (1 - 3 * a2) * _near_field_combination(x))
    return out if out.ndim else float(out)


def omega12_ratio(x, alignment: float = 1.0):
    """Omega12 / gamma as a function of x = k r12 (vectorised; diverges as x -> 0)."""
    x = _check_x(x)
    a2 = alignment * alignment
    c, s = np.cos(x), np.sin(x)
    out = 0.75 * (-(1 - a2) * c / x + (1 - 3 * a2) * (s / x**2 + c / x**3))
    return out if out.ndim else float(out)


def collective_rates(config: PhysicalConfig) -> CollectiveParams:
    """Collective damping gamma12 and dipole-dipole shift Omega12 for ``config``.

    For x below 1e-6 the Dicke limit gamma12 = gamma is returned with
    ``omega12 = inf`` and ``omega12_divergent = True``.
    """
    x = config.kr
    alignment = config.dipole_orientation.alignment
    gamma = config.gamma
    if x < DIVERGENCE_CUTOFF:
        return CollectiveParams(gamma=gamma, gamma12=gamma, omega12=math.inf, omega12_divergent=True)
    g12 = gamma * gamma12_ratio(x, alignment)
    # guard the |gamma12| <= gamma bound against final-ulp overshoot near x -> 0
    g12 = max(-gamma, min(gamma, g12))
    return CollectiveParams(gamma=gamma, gamma12=g12, omega12=gamma * omega12_ratio(x, alignment))


def gamma12_zeros(
    separation_min: float,
    separation_max: float,
    orientation: DipoleOrientation = DipoleOrientation.PARALLEL,
    scan_step: float = 1e-3,
) -> list:
    """Separations r12/lambda in [min, max] where gamma12 changes sign.

    Sign changes are bracketed on a uniform scan and polished with Brent's method.
    """
    if separation_min <= 0 or separation_max <= separation_min:
        raise DomainError("need 0 < separation_min < separation_max")
    alignment = DipoleOrientation(orientation).alignment

    def f(sep):
        return gamma12_ratio(2 * math.pi * sep, alignment)

    n = max(2, int(math.ceil((separation_max - separation_min) / scan_step)) + 1)
    grid = np.linspace(separation_min, separation_max, n)
    values = f(grid)
    zeros = []
    for i in range(n - 1):
        lo, hi = values[i], values[i + 1]
        if lo == 0.0:
            zeros.append(float(grid[i]))
        elif lo * hi < 0:
            zeros.append(brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if values[-1] == 0.0:
        zeros.append(float(grid[-1]))
    return zeros
