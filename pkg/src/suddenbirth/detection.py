"""
Sudden birth and death times of entanglement.

The detector works on the signed concurrence c_tilde(t), whose positive part
is the concurrence. A coarse uniform scan brackets the sign changes, which
are then refined by bisection.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .collective import collective_rates
from .core import CollectiveParams, DipoleOrientation, PhysicalConfig
from .dynamics import DEFAULT_STEP, EvolutionMode, c_tilde_source
from .errors import DomainError, NumericalError, SuddenBirthError
from .scenarios import build_initial_state

logger = logging.getLogger(__name__)

GRID_STEP = 1e-2
TIME_TOL = 1e-6
DEFAULT_T_MAX = 20.0
#: c_tilde must exceed this to count as entangled (rounding noise at separable states sits below).
ENTANGLED_TOL = 1e-12
#: Level used for the asymptotic death time when c never changes sign after birth
#: (raised to the source resolution when that is coarser).
ASYMPTOTIC_LEVEL = 1e-9


@dataclass(frozen=True)
class BirthReport:
    """Birth/death summary of one trajectory (times in units of 1/gamma).

    ``death_asymptotic`` marks a death time taken as the moment c falls
    below 1e-9 rather than a genuine sign change of c_tilde.
    """

    birth_time: Optional[float]
    death_time: Optional[float]
    peak_concurrence: float
    peak_time: float
    c_tilde_at_birth_bracket: Optional[tuple]
    death_asymptotic: bool = False
    t_max: float = DEFAULT_T_MAX

    def __post_init__(self):
        if self.birth_time is not None and self.death_time is not None and not self.birth_time < self.death_time:
            raise NumericalError(f"death time {self.death_time} does not follow birth time {self.birth_time}")
        if not 0.0 <= self.peak_concurrence <= 1.0:
            raise NumericalError(f"peak concurrence {self.peak_concurrence} outside [0, 1]")

    @property
    def entangled(self) -> bool:
        return self.birth_time is not None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["c_tilde_at_birth_bracket"] is not None:
            d["c_tilde_at_birth_bracket"] = list(d["c_tilde_at_birth_bracket"])
        return d


def _evaluate(source: Callable, t) -> np.ndarray:
    values = np.asarray(source(np.asarray(t, dtype=float)), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError("c_tilde source returned non-finite values")
    return values


def _bisect(source: Callable, lo: float, hi: float, above: Callable, tol: float):
    """Shrink [lo, hi] with above(lo) False and above(hi) True until hi - lo < tol."""
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if above(float(_evaluate(source, mid))):
            hi = mid
        else:
            lo = mid
    return lo, hi


def find_birth(
    source: Callable,
    t_max: float = DEFAULT_T_MAX,
    grid_step: float = GRID_STEP,
    tol: float = TIME_TOL,
    positive_tol: Optional[float] = None,
) -> BirthReport:
    """Locate the first birth and the last death of entanglement on [0, t_max].

    Parameters
    ----------
    source : callable
        Maps an array of times to c_tilde values (see
        :func:`suddenbirth.dynamics.c_tilde_source`).
    t_max : float
        End of the search window, in units of 1/gamma.
    grid_step : float
        Spacing of the bracketing scan.
    tol : float
        Width below which bisection stops.
    positive_tol : float, optional
        c_tilde must exceed this on the scan to count as entangled. Defaults
        to the source's ``resolution`` attribute, else 1e-12. Crossings are
        then refined on the sign of c_tilde wherever a scan point with
        c_tilde <= 0 brackets them.

    Notes
    -----
    Death is the last fall that is not followed by a renewed rise. When c
    stays positive the death time is where it decays through 1e-9, flagged
    with ``death_asymptotic``.
    """
    if not (math.isfinite(t_max) and t_max > 0):
        raise DomainError(f"t_max must be > 0, got {t_max!r}")
    n = max(1, math.ceil(t_max / grid_step - 1e-9))
    grid = np.linspace(0.0, t_max, n + 1)
    values = _evaluate(source, grid)
    if positive_tol is None:
        positive_tol = getattr(source, "resolution", ENTANGLED_TOL)
    level = max(ASYMPTOTIC_LEVEL, positive_tol)

    def entangled(v):
        return v > positive_tol

    positive = values > positive_tol
    birth = None
    bracket = None
    last_up = -1
    if positive[0]:
        birth = 0.0
        bracket = (float(values[0]), float(values[0]))
    ups = np.nonzero(~positive[:-1] & positive[1:])[0]
    if ups.size:
        last_up = int(ups[-1])
    if birth is None and ups.size:
        i = int(ups[0])
        # the threshold only brackets; refine on the sign of c_tilde itself when a
        # grid point with c_tilde <= 0 precedes the crossing
        nonpos = np.nonzero(values[: i + 1] <= 0)[0]
        if nonpos.size:
            j = int(nonpos[-1])
            lo, hi = _bisect(source, grid[j], grid[j + 1], lambda v: v > 0, tol)
        else:
            lo, hi = _bisect(source, grid[i], grid[i + 1], entangled, tol)
        birth = float(0.5 * (lo + hi))
        bracket = (float(_evaluate(source, lo)), float(_evaluate(source, hi)))

    death = None
    asymptotic = False
    if birth is not None:
        downs = np.nonzero(positive[:-1] & ~positive[1:])[0]
        downs = downs[downs > last_up]
        if downs.size:
            d = int(downs[-1])
            nonpos = np.nonzero(values[d + 1 :] <= 0)[0]
            if nonpos.size:
                k = d + 1 + int(nonpos[0])
                lo, hi = _bisect(source, grid[k - 1], grid[k], lambda v: not v > 0, tol)
            else:
                lo, hi = _bisect(source, grid[d], grid[d + 1], lambda v: not entangled(v), tol)
            death = float(0.5 * (lo + hi))
        else:
            high = values >= level
            falls = np.nonzero(high[:-1] & ~high[1:])[0]
            falls = falls[grid[falls + 1] > birth]
            if falls.size:
                i = int(falls[-1])
                lo, hi = _bisect(source, grid[i], grid[i + 1], lambda v: v < level, tol)
                death = float(0.5 * (lo + hi))
                asymptotic = True

    k = int(np.argmax(values))
    peak_time, peak_value = float(grid[k]), float(values[k])
    if peak_value > 0 and n > 1:
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, n)]
        res = minimize_scalar(
            lambda t: -float(_evaluate(source, t)), bounds=(a, b), method="bounded", options={"xatol": tol}
        )
        if res.success and -res.fun > peak_value:
            peak_time, peak_value = float(res.x), float(-res.fun)
    return BirthReport(
        birth_time=birth,
        death_time=death,
        peak_concurrence=min(1.0, max(0.0, peak_value)),
        peak_time=peak_time,
        c_tilde_at_birth_bracket=bracket,
        death_asymptotic=asymptotic,
        t_max=float(t_max),
    )


def fit_decay_rate(times, values) -> float:
    """Rate k of the least-squares fit log(values) ~ a - k t."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(values <= 0):
        raise NumericalError("decay fit needs strictly positive values")
    slope = np.polyfit(times, np.log(values), 1)[0]
    return float(-slope)


def post_peak_decay_rate(source: Callable, report: BirthReport, t_start: Optional[float] = None, samples: int = 401):
    """Exponential decay rate of the concurrence after its peak.

    The fit window defaults to the second half of [peak_time, t_max], where
    the separability term has died out and the tail is a single exponential.
    """
    if not report.entangled:
        raise DomainError("no entanglement to fit")
    if t_start is None:
        t_start = report.peak_time + 0.5 * (report.t_max - report.peak_time)
    times = np.linspace(t_start, report.t_max, samples)
    return fit_decay_rate(times, _evaluate(source, times))


# -- sweeps ---------------------------------------------------------------


def resolve_params(
    config: PhysicalConfig,
    gamma12_override: Optional[float] = None,
    omega12_override: Optional[float] = None,
) -> CollectiveParams:
    """Rates for ``config`` with optional manual overrides of gamma12 / Omega12."""
    params = collective_rates(config)
    changes = {}
    if gamma12_override is not None:
        changes["gamma12"] = gamma12_override
    if omega12_override is not None:
        changes["omega12"] = omega12_override
    return params.replace(**changes) if changes else params


@dataclass(frozen=True)
class SweepCell:
    theta_deg: float
    separation_over_lambda: float
    params: Optional[CollectiveParams]
    report: Optional[BirthReport]
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def birth_for_config(
    scenario: str,
    config: PhysicalConfig,
    t_max: float = DEFAULT_T_MAX,
    mode: EvolutionMode = EvolutionMode(),
    dicke_model: bool = False,
    gamma12_override: Optional[float] = None,
    omega12_override: Optional[float] = None,
    step: float = DEFAULT_STEP,
):
    """Build the scenario for ``config``, evolve it and run :func:`find_birth`.

    Returns ``(params, report)``.
    """
    params = resolve_params(config, gamma12_override, omega12_override)
    rho0 = build_initial_state(scenario, config)
    source = c_tilde_source(rho0, params, mode, dicke_model=dicke_model, step=step)
    return params, find_birth(source, t_max)


def sweep_birth_map(
    scenario: str,
    thetas: Sequence[float],
    separations: Sequence[float],
    t_max: float = DEFAULT_T_MAX,
    mode: EvolutionMode = EvolutionMode(),
    orientation: DipoleOrientation = DipoleOrientation.PARALLEL,
    gamma12_override: Optional[float] = None,
    omega12_override: Optional[float] = None,
    dicke_model: bool = False,
    step: float = DEFAULT_STEP,
    workers: int = 1,
) -> list:
    """Birth reports over the theta x separation grid, in row-major grid order.

    A failing cell is returned with ``error`` set instead of aborting the sweep.
    """
    cells = [(float(th), float(sep)) for th in thetas for sep in separations]

    def run(cell):
        theta, sep = cell
        params = None
        try:
            config = PhysicalConfig(separation_over_lambda=sep, dipole_orientation=orientation, theta_deg=theta)
            params, report = birth_for_config(
                scenario, config, t_max, mode, dicke_model, gamma12_override, omega12_override, step
            )
            return SweepCell(theta, sep, params, report)
        except (SuddenBirthError, ArithmeticError, ValueError) as exc:
            logger.warning("sweep cell theta=%g sep=%g failed: %s", theta, sep, exc)
            return SweepCell(theta, sep, params, None, error=f"{type(exc).__name__}: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, cells))
    return [run(c) for c in cells]
