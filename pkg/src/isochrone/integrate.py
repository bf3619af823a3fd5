"""Adaptive Dormand-Prince 5(4) integration, event location and period measurement."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import SystemDef, Trajectory, characteristic_field
from .errors import DomainExit, MaxStepsExceeded, NoReturn, StepUnderflow

__all__ = [
    "IntegratorConfig",
    "Event",
    "PeriodResult",
    "integrate",
    "find_event",
    "find_events",
    "measure_period",
    "as_field",
]

log = logging.getLogger(__name__)

# Dormand-Prince coefficients; the dense-output matrix P gives the
# free 4th-order interpolant (Hairer, Norsett & Wanner, Sec. II.6).
C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# events within this relative time of a terminal event are reported with it
EVENT_TIE = 1e-9


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float = 1e-4
    h_min: float = 1e-14
    t_max: float = 50.0
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if not self.h_min < self.h_init:
            raise ValueError("h_min must be smaller than h_init")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")

    def replace(self, **changes) -> "IntegratorConfig":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return IntegratorConfig(**values)


@dataclass
class Event:
    """Zero crossing of ``g(t, y)``.

    ``direction`` is ``+1`` (upward), ``-1`` (downward) or ``0`` (any).
    ``terminal`` stops the integration after that many crossings; 0 never stops.
    """

    g: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: int = 0
    name: str = "event"


@dataclass
class PeriodResult:
    T: float
    return_error: float
    n_crossings_used: int
    candidates: list = field(default_factory=list)

    def closed(self, tol: float = 1e-6) -> bool:
        return self.return_error <= tol


_DIRECTIONS = {"+": 1, "-": -1, "any": 0, 1: 1, -1: -1, 0: 0}


def _direction(direction) -> int:
    try:
        return _DIRECTIONS[direction]
    except KeyError:
        raise ValueError(f"direction must be '+', '-' or 'any', got {direction!r}") from None


def _crosses(g0: float, g1: float, direction: int) -> bool:
    """Sign change from ``g0`` to ``g1``; a start exactly at zero never counts."""
    up = g0 < 0.0 <= g1
    down = g0 > 0.0 >= g1
    if direction > 0:
        return up
    if direction < 0:
        return down
    return up or down


def as_field(sys_or_field):
    if isinstance(sys_or_field, SystemDef):
        return characteristic_field(sys_or_field)
    return sys_or_field


def _rk_step(fun, t, y, f0, h):
    K = np.empty((7,) + y.shape)
    K[0] = f0
    for s in range(1, 6):
        dy = np.tensordot(A[s], K[:s], axes=(0, 0)) * h
        K[s] = fun(t + C[s] * h, y + dy)
    y_new = y + h * np.tensordot(B, K[:6], axes=(0, 0))
    K[6] = fun(t + h, y_new)
    err = h * np.tensordot(E, K, axes=(0, 0))
    return y_new, K, err


def _locate(g, t0, t1, interp, direction):
    """Refine a bracketed root of ``g`` on the step interpolant."""

    def gt(t):
        return g(t, interp(t))

    g0, g1 = gt(t0), gt(t1)
    if g1 == 0.0:
        return t1
    if g0 == 0.0:
        return t0
    return brentq(gt, t0, t1, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def integrate(field, state0, config: IntegratorConfig = IntegratorConfig(), *,
              events: Sequence[Event] = (), t0: float = 0.0, dense: bool = True,
              t_eval: Optional[Sequence[float]] = None) -> Trajectory:
    """Integrate ``y' = field(t, y)`` from ``t0`` to ``t0 + config.t_max``.

    Parameters
    ----------
    field : callable or SystemDef
        Right-hand side ``f(t, y)``; a :class:`SystemDef` is turned into its
        characteristic field.
    events : sequence of Event
        Crossings are located on the dense output and stored in
        ``trajectory.events`` as ``(name, t, y)``; terminal events end the run.
    dense : bool
        Keep every accepted step and its interpolant. With ``dense=False``
        only the first and last samples, the ``t_eval`` values and the events
        are retained, which keeps memory flat for long batched runs.
    t_eval : sequence of float, optional
        Times at which interpolated states are stored in ``trajectory.t_eval``
        and ``trajectory.y_eval``.

    Raises
    ------
    StepUnderflow
        When the accepted step would drop below ``config.h_min``; the partial
        trajectory is attached.
    MaxStepsExceeded
    """
    fun = as_field(field)
    y = np.array(state0, dtype=float)
    t = float(t0)
    t_end = t + config.t_max
    ts, ys, cs = [t], [y.copy()], []
    ev_out = []
    t_eval = np.sort(np.asarray([] if t_eval is None else t_eval, dtype=float))
    eval_vals = []
    ei = 0
    while ei < t_eval.size and t_eval[ei] <= t:
        eval_vals.append(y.copy())
        ei += 1

    def finish(status):
        if not dense and (ts[-1] != t):
            ts.append(t)
            ys.append(y.copy())
        traj = Trajectory(ts, ys, cs if dense else None, status=status, events=ev_out)
        traj.t_eval = t_eval[: len(eval_vals)]
        traj.y_eval = np.array(eval_vals).reshape((len(eval_vals),) + y.shape)
        return traj

    if config.t_max == 0:
        return finish("t_max")

    f0 = np.asarray(fun(t, y), dtype=float)
    counts = [0] * len(events)
    g_prev = [float(ev.g(t, y)) for ev in events]
    h = min(config.h_init, t_end - t)
    steps = 0
    domain_blocked = False
    while t < t_end:
        if steps >= config.max_steps:
            raise MaxStepsExceeded(t, finish("max_steps"))
        if h < config.h_min and t_end - t > config.h_min:
            if domain_blocked:
                log.debug("domain exit at t=%.17g", t)
                return finish("domain_exit")
            traj = finish("step_underflow")
            raise StepUnderflow(t, traj)
        last = t + h >= t_end
        if last:
            h = t_end - t
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                y_new, K, err = _rk_step(fun, t, y, f0, h)
            finite = np.all(np.isfinite(y_new)) and np.all(np.isfinite(err))
            domain_blocked = False
        except DomainExit:
            finite = False
            domain_blocked = True
        if not finite:
            h *= 0.25
            continue
        scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale)) if err.size else 0.0
        if err_norm > 1.0:
            h *= max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
            continue
        steps += 1
        t_new = t_end if last else t + h
        coeff = np.tensordot(P, K, axes=(0, 0))  # (4,) + shape
        coeff = np.moveaxis(coeff, 0, -1)
        t_start, y_start = t, y

        def interp(s, _t=t_start, _y=y_start, _h=t_new - t_start, _c=coeff):
            th = (s - _t) / _h
            return _y + _h * (_c @ np.array([th, th * th, th**3, th**4]))

        stop = False
        hits = []
        for i, ev in enumerate(events):
            g_new = float(ev.g(t_new, y_new))
            d = _direction(ev.direction)
            if _crosses(g_prev[i], g_new, d):
                t_root = _locate(ev.g, t_start, t_new, interp, d)
                hits.append((t_root, i))
            g_prev[i] = g_new
        t_stop = math.inf
        for t_root, i in sorted(hits):
            if t_root > t_stop + EVENT_TIE * max(1.0, abs(t_stop)):
                break
            ev = events[i]
            counts[i] += 1
            ev_out.append((ev.name, t_root, interp(t_root)))
            if ev.terminal and counts[i] >= ev.terminal and not stop:
                stop, t_stop = True, t_root
                if t_root > t_start:
                    # the run ends on the event: shrink the step onto [t_start, t_root]
                    r = (t_root - t_start) / (t_new - t_start)
                    y_new = interp(t_root)
                    coeff = coeff * r ** np.arange(4)
                    t_new = t_root
        if ei < t_eval.size:
            while ei < t_eval.size and t_eval[ei] <= t_new:
                eval_vals.append(interp(t_eval[ei]))
                ei += 1
        t, y, f0 = t_new, y_new, K[6]
        if dense:
            ts.append(t)
            ys.append(y.copy())
            cs.append(coeff)
        if stop:
            return finish("event")
        factor = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, SAFETY * err_norm ** -0.2)
        h *= max(MIN_FACTOR, factor)
    return finish("t_max")


def find_events(traj: Trajectory, g, direction="any", *, first_only=False):
    """All crossings of ``g`` along a dense trajectory, in time order."""
    d = _direction(direction)
    roots = []
    if len(traj) < 2:
        return roots
    gv = np.array([g(t, y) for t, y in zip(traj.t, traj.y)], dtype=float)
    for k in range(len(traj) - 1):
        if _crosses(gv[k], gv[k + 1], d):
            roots.append(_locate(g, traj.t[k], traj.t[k + 1],
                                 lambda s, k=k: traj.eval_step(k, s), d))
            if first_only:
                break
    return roots


def find_event(traj: Trajectory, g, direction="any") -> Optional[float]:
    """First crossing time of ``g(t, state)`` in the given direction, or ``None``.

    The starting point never counts as a crossing, even when ``g`` vanishes
    there. ``direction='+'`` selects upward crossings (``g`` from negative to
    non-negative), ``'-'`` downward ones.
    """
    roots = find_events(traj, g, direction, first_only=True)
    return roots[0] if roots else None


def measure_period(sys_or_field, state0, config: IntegratorConfig = IntegratorConfig(), *,
                   max_returns: int = 4, match_tol: float = 1e-6) -> PeriodResult:
    """First-return period of a closed orbit through ``state0``.

    The section is ``{s_k = state0[k]}`` where ``k`` maximises
    ``|f_k(state0)|``, crossed in the same direction as at ``t = 0``.
    Every crossing up to ``max_returns`` (or ``config.t_max``) is a
    candidate; the period is the earliest candidate whose full-state
    distance to ``state0`` is within ``match_tol`` of the smallest distance
    seen, which rejects subharmonic false returns. The distance is reported
    as ``return_error`` and never hidden.

    Raises
    ------
    NoReturn
        If the orbit does not come back to the section within ``config.t_max``.
    """
    fun = as_field(sys_or_field)
    s0 = np.asarray(state0, dtype=float)
    f0 = np.asarray(fun(0.0, s0), dtype=float)
    k = int(np.argmax(np.abs(f0)))
    if f0[k] == 0.0:
        raise NoReturn("initial state is an equilibrium; no period to measure")
    direction = 1 if f0[k] > 0 else -1
    section = Event(lambda t, y: y[k] - s0[k], direction, terminal=max_returns, name="section")
    traj = integrate(fun, s0, config, events=[section], dense=False)
    hits = [(t, y) for name, t, y in traj.events if name == "section"]
    if not hits:
        raise NoReturn(f"no return to the section within t_max={config.t_max}")
    dists = [float(np.linalg.norm(y - s0)) for _, y in hits]
    best = min(dists)
    idx = next(i for i, dd in enumerate(dists) if dd <= best + match_tol)
    return PeriodResult(T=float(hits[idx][0]), return_error=dists[idx],
                        n_crossings_used=idx + 1,
                        candidates=[(float(t), dd) for (t, _), dd in zip(hits, dists)])
