"""Augmented characteristic systems, gradient blow-up detection and the Radon lemma.

Along a characteristic the pair ``(q, y)`` obeys the linear system
``(q, y)' = J(x(t), Y(t)) (q, y)`` with ``J`` the Jacobian of the
characteristic field and ``(q, y)(0) = (1, Y0'(x0))``. ``q`` is the
derivative of the characteristic position with respect to its starting
point, so the spatial gradient ``Y_x = y / q`` blows up exactly when ``q``
first reaches zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import SystemDef, Trajectory, eval_linearization, eval_rhs
from .errors import StepUnderflow
from .integrate import Event, IntegratorConfig, integrate

__all__ = [
    "augment",
    "monodromy_field",
    "BlowupReport",
    "detect_blowup",
    "RiccatiSpec",
    "RiccatiSolution",
    "solve_riccati_direct",
    "radon_reconstruct",
    "radon_singular_time",
    "riccati_along",
]


def augment(sys: SystemDef):
    """Field of dimension ``2(n+1)`` on ``(x, Y, q, y)``.

    The state may also be a ``(2(n+1), N)`` array, i.e. a fan of ``N``
    independent characteristics evaluated in one call; a flat vector of
    length ``2(n+1)*N`` is reshaped accordingly.
    """
    m = sys.n + 1

    def f(t, z):
        flat = z.ndim == 1 and z.size != 2 * m
        Z = z.reshape(2 * m, -1) if flat else z
        dx, dY = eval_rhs(sys, Z[0], Z[1:m])
        J = eval_linearization(sys, Z[0], Z[1:m], checked=True)
        out = np.empty_like(Z, dtype=float)
        out[0] = dx
        out[1:m] = dY
        out[m:] = np.einsum("ij...,j...->i...", J, Z[m:])
        return out.reshape(z.shape) if flat else out

    return f


def monodromy_field(sys: SystemDef):
    """Field on ``(s, Phi)`` with ``Phi' = J(s) Phi``, ``Phi`` of size ``(n+1)^2``."""
    m = sys.n + 1

    def f(t, z):
        s = z[:m]
        Phi = z[m:].reshape(m, m)
        dx, dY = eval_rhs(sys, s[0], s[1:])
        J = eval_linearization(sys, s[0], s[1:], checked=True)
        out = np.empty_like(z)
        out[0] = dx
        out[1:m] = dY
        out[m:] = (J @ Phi).ravel()
        return out

    return f


@dataclass
class BlowupReport:
    """Outcome of :func:`detect_blowup`.

    ``kind`` is ``"gradient"`` when ``q`` reached zero and ``"state"`` when the
    characteristic system itself collapsed (step underflow) first.
    """

    blown: bool
    t_star: Optional[float]
    q_min: float
    horizon: float
    kind: Optional[str] = None
    trajectory: Optional[Trajectory] = None

    def as_dict(self) -> dict:
        return {"blown": self.blown, "t_star": self.t_star, "q_min": self.q_min,
                "horizon": self.horizon, "kind": self.kind}


def detect_blowup(sys: SystemDef, x0: float, Y0, y0, config: IntegratorConfig = IntegratorConfig(),
                  horizon: Optional[float] = None) -> BlowupReport:
    """Integrate the augmented system until ``q`` first vanishes or ``horizon``."""
    horizon = config.t_max if horizon is None else float(horizon)
    m = sys.n + 1
    z0 = np.concatenate([[x0], np.asarray(Y0, float), [1.0], np.asarray(y0, float)])
    q_zero = Event(lambda t, z: z[m], direction=-1, terminal=1, name="q")
    try:
        traj = integrate(augment(sys), z0, config.replace(t_max=horizon), events=[q_zero])
    except StepUnderflow as exc:
        q = exc.trajectory.y[:, m] if exc.trajectory is not None else np.array([1.0])
        return BlowupReport(True, exc.t, float(min(q.min(), 1.0)), horizon, "state", exc.trajectory)
    q_min = float(min(traj.y[:, m].min(), 1.0))
    hits = [t for name, t, _ in traj.events if name == "q"]
    if hits:
        return BlowupReport(True, float(hits[0]), q_min, horizon, "gradient", traj)
    return BlowupReport(False, None, q_min, horizon, None, traj)


@dataclass
class RiccatiSpec:
    """Blocks of ``W' = M21 + M22 W - W M11 - W M12 W``.

    With ``W`` of shape ``(m, k)`` the blocks are ``M11: (k, k)``,
    ``M12: (k, m)``, ``M21: (m, k)`` and ``M22: (m, m)``; each is a callable
    of ``t``. The companion linear system acts on ``(Q; P)`` with ``Q`` of
    shape ``(k, k)`` and ``W = P Q^{-1}``.
    """

    M11: Callable
    M12: Callable
    M21: Callable
    M22: Callable
    W0: np.ndarray

    def __post_init__(self):
        self.W0 = np.atleast_2d(np.asarray(self.W0, dtype=float))
        m, k = self.W0.shape
        shapes = {"M11": (k, k), "M12": (k, m), "M21": (m, k), "M22": (m, m)}
        for name, shape in shapes.items():
            got = np.atleast_2d(np.asarray(getattr(self, name)(0.0), dtype=float)).shape
            if got != shape:
                raise ValueError(f"{name} has shape {got}, expected {shape}")

    @classmethod
    def constant(cls, M11, M12, M21, M22, W0) -> "RiccatiSpec":
        blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in (M11, M12, M21, M22)]
        return cls(*(lambda t, b=b: b for b in blocks), W0=W0)

    @property
    def shape(self):
        return self.W0.shape

    def blocks(self, t):
        return [np.atleast_2d(np.asarray(b(t), dtype=float))
                for b in (self.M11, self.M12, self.M21, self.M22)]

    def linear_matrix(self, t) -> np.ndarray:
        M11, M12, M21, M22 = self.blocks(t)
        return np.block([[M11, M12], [M21, M22]])


@dataclass
class RiccatiSolution:
    t: np.ndarray
    W: np.ndarray
    det_Q: Optional[np.ndarray] = None
    singular: Optional[np.ndarray] = None
    status: str = "t_max"


SINGULAR_DET = 1e-12


def solve_riccati_direct(spec: RiccatiSpec, tspan, config: IntegratorConfig = IntegratorConfig(),
                         t_eval=None) -> RiccatiSolution:
    """Integrate the matrix Riccati equation entrywise.

    Raises
    ------
    StepUnderflow
        At a finite-time escape of ``W``.
    """
    t0, t1 = map(float, tspan)
    shape = spec.shape

    def f(t, w):
        W = w.reshape(shape)
        M11, M12, M21, M22 = spec.blocks(t)
        return (M21 + M22 @ W - W @ M11 - W @ M12 @ W).ravel()

    traj = integrate(f, spec.W0.ravel(), config.replace(t_max=t1 - t0), t0=t0, t_eval=t_eval)
    if t_eval is None:
        return RiccatiSolution(traj.t, traj.y.reshape((-1,) + shape), status=traj.status)
    return RiccatiSolution(traj.t_eval, traj.y_eval.reshape((-1,) + shape), status=traj.status)


def radon_reconstruct(spec: RiccatiSpec, tspan, config: IntegratorConfig = IntegratorConfig(),
                      t_eval=None) -> RiccatiSolution:
    """Solve the Riccati equation through its linear companion, ``W = P Q^{-1}``.

    Samples where ``|det Q| < 1e-12`` are flagged in ``singular`` and carry
    ``nan`` in ``W``; the linear system itself never escapes.
    """
    t0, t1 = map(float, tspan)
    m, k = spec.shape
    Y0 = np.vstack([np.eye(k), spec.W0])

    def f(t, y):
        return (spec.linear_matrix(t) @ y.reshape(k + m, k)).ravel()

    traj = integrate(f, Y0.ravel(), config.replace(t_max=t1 - t0), t0=t0, t_eval=t_eval)
    ts, ys = (traj.t, traj.y) if t_eval is None else (traj.t_eval, traj.y_eval)
    Ys = ys.reshape(-1, k + m, k)
    Qs, Ps = Ys[:, :k], Ys[:, k:]
    det = np.linalg.det(Qs)
    singular = np.abs(det) < SINGULAR_DET
    W = np.full((len(ts), m, k), np.nan)
    ok = ~singular
    if ok.any():
        W[ok] = Ps[ok] @ np.linalg.inv(Qs[ok])
    return RiccatiSolution(ts, W, det, singular, status=traj.status)


def radon_singular_time(spec: RiccatiSpec, tspan,
                        config: IntegratorConfig = IntegratorConfig()) -> Optional[float]:
    """First time in ``tspan`` where ``det Q`` of the linear companion vanishes, or ``None``."""
    t0, t1 = map(float, tspan)
    m, k = spec.shape
    Y0 = np.vstack([np.eye(k), spec.W0])

    def f(t, y):
        return (spec.linear_matrix(t) @ y.reshape(k + m, k)).ravel()

    def det_q(t, y):
        return float(np.linalg.det(y.reshape(k + m, k)[:k]))

    ev = Event(det_q, direction=0, terminal=1, name="det_Q")
    traj = integrate(f, Y0.ravel(), config.replace(t_max=t1 - t0), t0=t0, events=[ev],
                     dense=False)
    hits = [t for name, t, _ in traj.events if name == "det_Q"]
    return float(hits[0]) if hits else None


def riccati_along(sys: SystemDef, traj: Trajectory, y0) -> RiccatiSpec:
    """Riccati blocks for the gradient ``Y_x`` along a dense characteristic trajectory.

    ``k = 1``, ``m = n``: ``M11 = Q_x``, ``M12 = Q_Y``, ``M21 = S_x``,
    ``M22 = S_Y``, evaluated on the interpolated ``(x(t), Y(t))``.
    """
    n = sys.n

    def J(t):
        s = traj(t)
        return eval_linearization(sys, s[0], s[1:n + 1])

    return RiccatiSpec(
        M11=lambda t: J(t)[:1, :1],
        M12=lambda t: J(t)[:1, 1:],
        M21=lambda t: J(t)[1:, :1],
        M22=lambda t: J(t)[1:, 1:],
        W0=np.asarray(y0, dtype=float).reshape(n, 1),
    )
