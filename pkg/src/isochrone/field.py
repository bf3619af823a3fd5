"""Method-of-characteristics reconstruction and characteristic-crossing detection.

A fan of ``N_x`` characteristics seeded at equispaced points is integrated
as one batched augmented system; each carries ``(x, Y, q, y)`` with
``q(0) = 1`` and ``y(0) = Y0'(x_seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .core import SystemDef
from .errors import StepUnderflow
from .integrate import Event, IntegratorConfig, integrate
from .variational import augment

__all__ = [
    "InitialProfile",
    "FieldSnapshot",
    "CrossingReport",
    "reconstruct_field",
    "detect_crossing",
    "resample",
    "gaussian_profile",
    "constant_profile",
]


@dataclass
class InitialProfile:
    """Initial data ``Y0(x)`` on ``[x_lo, x_hi]`` sampled by ``N_x`` seeds.

    ``Y0`` maps an array of seeds to an ``(n, N_x)`` array; ``dY0`` is its
    derivative and defaults to central differences.
    """

    Y0: Callable
    window: tuple
    N_x: int = 64
    dY0: Optional[Callable] = None

    def __post_init__(self):
        if self.N_x < 2:
            raise ValueError("N_x must be at least 2")
        if not self.window[0] < self.window[1]:
            raise ValueError("window must be an increasing interval")

    @property
    def seeds(self) -> np.ndarray:
        return np.linspace(self.window[0], self.window[1], self.N_x)

    def values(self, x) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.Y0(x), dtype=float))

    def derivative(self, x) -> np.ndarray:
        if self.dY0 is not None:
            return np.atleast_2d(np.asarray(self.dY0(x), dtype=float))
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        return (self.values(x + h) - self.values(x - h)) / (2 * h)


def gaussian_profile(amplitude: float = 0.2, n: int = 2, component: int = 1,
                     window=(-3.0, 3.0), N_x: int = 64) -> InitialProfile:
    """``Y0(x) = amplitude * exp(-x^2)`` in one component, zero elsewhere."""

    def Y0(x):
        out = np.zeros((n,) + np.shape(x))
        out[component] = amplitude * np.exp(-np.asarray(x) ** 2)
        return out

    def dY0(x):
        out = np.zeros((n,) + np.shape(x))
        out[component] = -2.0 * np.asarray(x) * amplitude * np.exp(-np.asarray(x) ** 2)
        return out

    return InitialProfile(Y0, tuple(window), N_x, dY0)


def constant_profile(value, window=(-3.0, 3.0), N_x: int = 16) -> InitialProfile:
    value = np.asarray(value, dtype=float)

    def Y0(x):
        return np.repeat(value[:, None], np.size(x), axis=1).reshape((value.size,) + np.shape(x))

    return InitialProfile(Y0, tuple(window), N_x, lambda x: np.zeros((value.size,) + np.shape(x)))


@dataclass
class FieldSnapshot:
    """Scattered state of the fan at time ``t``, rows ordered by seed index."""

    t: float
    X: np.ndarray
    Y: np.ndarray  # (N, n)
    y: np.ndarray  # (N, n), sensitivities dY/dx_seed
    q: np.ndarray
    ordered: bool = True

    @property
    def gradient(self) -> np.ndarray:
        """Spatial derivative ``Y_x = y / q`` of the reconstructed field."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.y / self.q[:, None]


@dataclass
class CrossingReport:
    found: bool
    pair: Optional[tuple] = None
    t_cross: Optional[float] = None
    t_q_zero: Optional[float] = None
    min_q_at_cross: Optional[float] = None
    agree: Optional[bool] = None
    bound: Optional[float] = None
    t_max: float = 0.0
    history: dict = field(default_factory=dict)


def _fan_state(sys: SystemDef, profile: InitialProfile):
    x = profile.seeds
    N, n = x.size, sys.n
    Z = np.empty((2 * (n + 1), N))
    Z[0] = x
    Z[1:n + 1] = profile.values(x)
    Z[n + 1] = 1.0
    Z[n + 2:] = profile.derivative(x)
    return Z


def _snapshot(sys, t, z, N) -> FieldSnapshot:
    n = sys.n
    Z = z.reshape(2 * (n + 1), N)
    X = Z[0].copy()
    return FieldSnapshot(t=float(t), X=X, Y=Z[1:n + 1].T.copy(), y=Z[n + 2:].T.copy(),
                         q=Z[n + 1].copy(), ordered=bool(np.all(np.diff(X) > 0)))


def reconstruct_field(sys: SystemDef, profile: InitialProfile, t_grid,
                      config: IntegratorConfig = IntegratorConfig()) -> List[FieldSnapshot]:
    """Snapshots of the characteristic fan at each time in ``t_grid``.

    Characteristics whose ``q`` has changed sign are reported through the
    snapshot (``q <= 0``, ``ordered=False`` once positions swap), not as
    errors. If the characteristic system itself collapses, snapshots stop at
    the last reachable time.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    Z0 = _fan_state(sys, profile)
    N = profile.N_x
    t_end = float(t_grid.max()) if t_grid.size else 0.0
    try:
        traj = integrate(augment(sys), Z0.ravel(), config.replace(t_max=t_end),
                         dense=False, t_eval=t_grid)
    except StepUnderflow as exc:
        traj = exc.trajectory
    return [_snapshot(sys, t, z, N) for t, z in zip(traj.t_eval, traj.y_eval)]


def detect_crossing(sys: SystemDef, profile: InitialProfile, t_max: float,
                    config: IntegratorConfig = IntegratorConfig(),
                    history_points: int = 0) -> CrossingReport:
    """First time two adjacent characteristics meet.

    The smallest adjacent gap ``min_i (X_{i+1} - X_i)`` is monitored as an
    event; the first seeded ``q_i = 0`` is tracked in parallel. Both signals
    are reported together with their agreement against the bound
    ``2 * dx * max|Q|`` over the fan at the crossing.
    """
    N, n = profile.N_x, sys.n
    m = n + 1
    Z0 = _fan_state(sys, profile)
    dx = (profile.window[1] - profile.window[0]) / (N - 1)

    def gap(t, z):
        return float(np.min(np.diff(z[:N])))

    def qmin(t, z):
        return float(np.min(z[m * N:(m + 1) * N]))

    events = [Event(gap, -1, terminal=1, name="gap"), Event(qmin, -1, terminal=0, name="q")]
    t_eval = np.linspace(0.0, t_max, history_points) if history_points else None
    try:
        traj = integrate(augment(sys), Z0.ravel(), config.replace(t_max=t_max),
                         events=events, dense=False, t_eval=t_eval)
    except StepUnderflow as exc:
        traj = exc.trajectory
    history = {}
    if history_points and traj is not None:
        ys = traj.y_eval
        history = {"t": traj.t_eval,
                   "min_gap": np.array([gap(0, z) for z in ys]),
                   "min_q": np.array([qmin(0, z) for z in ys])}
    hits = {name: (t, z) for name, t, z in reversed(traj.events)}
    if "gap" not in hits:
        t_q = hits["q"][0] if "q" in hits else None
        return CrossingReport(False, t_q_zero=t_q, t_max=t_max, history=history)
    t_cross, z = hits["gap"]
    X = z[:N]
    i = int(np.argmin(np.diff(X)))
    t_q = hits["q"][0] if "q" in hits else None
    Z = z.reshape(2 * m, N)
    speed = float(np.max(np.abs(sys.Q(Z[0], Z[1:m]))))
    bound = 2.0 * dx * max(speed, 1e-300)
    agree = bool(t_q is not None and abs(t_cross - t_q) <= bound)
    return CrossingReport(True, (i, i + 1), float(t_cross), t_q, qmin(t_cross, z), agree,
                          bound, t_max, history)


def resample(snapshot: FieldSnapshot, x_grid) -> np.ndarray:
    """Monotone (PCHIP) interpolation of ``Y`` onto an Eulerian grid.

    Refused once the fan is no longer ordered, since the field is then multivalued.
    """
    if not snapshot.ordered:
        raise ValueError(f"characteristics have crossed by t={snapshot.t}; field is multivalued")
    return PchipInterpolator(snapshot.X, snapshot.Y, axis=0, extrapolate=False)(x_grid)
