"""System abstraction for characteristic systems ``x' = Q(x, Y)``, ``Y' = S(x, Y)``.

All user callables follow one broadcasting convention so that a single
definition serves both scalar evaluation and a fan of characteristics:

* ``x`` is a float or an array of shape ``batch``;
* ``Y`` is an array of shape ``(n,)`` or ``(n,) + batch``, and components are
  read as ``Y[0]``, ``Y[1]``, ...;
* ``Q`` returns something of shape ``batch``, ``S`` and the partials return
  (possibly nested) sequences whose leaves broadcast to ``batch``.

Partials, when supplied, have the layouts ``Q_x: batch``, ``Q_Y: (n,)+batch``,
``S_x: (n,)+batch`` and ``S_Y: (n, n)+batch`` with ``S_Y[i][j] = dS_i/dY_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainExit, InvalidModel

__all__ = [
    "Domain",
    "SystemDef",
    "CharState",
    "AugmentedState",
    "Trajectory",
    "eval_rhs",
    "eval_linearization",
    "characteristic_field",
    "check_zero_equilibrium",
    "check_partials",
    "fd_step",
]

Func = Callable[..., object]

FD_REL = 1e-6


def fd_step(value):
    """Central-difference step ``max(1e-6, 1e-6*|value|)``, elementwise."""
    return np.maximum(FD_REL, FD_REL * np.abs(value))


def _broadcast_nested(obj, shape, nested=None) -> np.ndarray:
    """Turn a (nested) sequence of scalars/arrays into one float array.

    Leaves are broadcast to ``shape`` so that ``[0, x]`` with array ``x``
    works as expected. ``nested`` is the expected leading shape, when known,
    and enables a fast path for already-stacked results.
    """
    shape = tuple(shape)
    if nested is not None:
        out = np.empty(tuple(nested) + shape)
        _fill(out, obj, len(nested), len(shape))
        return out
    if isinstance(obj, np.ndarray) and obj.dtype != object:
        if obj.ndim >= len(shape) and obj.shape[obj.ndim - len(shape):] == shape:
            return obj.astype(float, copy=False)
        if obj.ndim == 0:
            return np.full(shape, float(obj))
    if isinstance(obj, (list, tuple, np.ndarray)):
        return np.stack([_broadcast_nested(o, shape) for o in obj])
    return np.full(shape, float(obj))


def _fill(out, obj, depth, batch_ndim, prefix=()):
    if depth == 0 or (isinstance(obj, np.ndarray) and obj.ndim == depth + batch_ndim):
        out[prefix] = obj
    else:
        for i in range(out.shape[len(prefix)]):
            _fill(out, obj[i], depth - 1, batch_ndim, prefix + (i,))


@dataclass(frozen=True)
class Domain:
    """Open x-interval times a closed box for Y."""

    x_bounds: tuple = (-math.inf, math.inf)
    y_bounds: tuple = ()

    def contains(self, x, Y) -> bool:
        x = np.asarray(x, dtype=float)
        Y = np.asarray(Y, dtype=float)
        lo, hi = self.x_bounds
        with np.errstate(invalid="ignore"):
            if not (x.min() > lo and x.max() < hi):
                return False
            if not np.isfinite(Y).all():
                return False
            for i, (ylo, yhi) in enumerate(self.y_bounds):
                row = Y[i]
                if not (row.min() >= ylo and row.max() <= yhi):
                    return False
        return True

    def sample_x(self, num: int, span: float = 10.0) -> np.ndarray:
        lo, hi = self.x_bounds
        lo = max(lo, -span)
        hi = min(hi, span)
        pad = 1e-3 * (hi - lo)
        return np.linspace(lo + pad, hi - pad, num)

    def sample_box(self, n: int, rng: np.random.Generator, num: int, span: float = 1.0):
        """Random points of the domain, each Y-component clipped to ``[-span, span]``."""
        x = rng.uniform(*self._clip(self.x_bounds, 10.0 * span), size=num)
        Y = np.empty((n, num))
        for i in range(n):
            bounds = self.y_bounds[i] if i < len(self.y_bounds) else (-math.inf, math.inf)
            Y[i] = rng.uniform(*self._clip(bounds, span), size=num)
        return x, Y

    @staticmethod
    def _clip(bounds, span):
        lo, hi = bounds
        lo, hi = max(lo, -span), min(hi, span)
        pad = 1e-3 * (hi - lo)
        return lo + pad, hi - pad


@dataclass(frozen=True)
class SystemDef:
    """A characteristic system together with its validity domain.

    ``zero_equilibrium`` is ``False`` only for models that deliberately
    violate ``Q(x,0)=0, S(x,0)=0`` (the Hopf-with-potential counterexample);
    :func:`check_zero_equilibrium` skips such models explicitly.
    """

    n: int
    Q: Func
    S: Func
    name: str = "system"
    domain: Domain = field(default_factory=Domain)
    Q_x: Optional[Func] = None
    Q_Y: Optional[Func] = None
    S_x: Optional[Func] = None
    S_Y: Optional[Func] = None
    zero_equilibrium: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidModel(f"n must be a positive integer, got {self.n}")
        if len(self.domain.y_bounds) not in (0, self.n):
            raise InvalidModel("domain box must have one bound pair per Y component")

    @property
    def dim(self) -> int:
        return self.n + 1

    @property
    def has_partials(self) -> bool:
        return None not in (self.Q_x, self.Q_Y, self.S_x, self.S_Y)


@dataclass
class CharState:
    t: float
    x: float
    Y: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.x], np.asarray(self.Y, dtype=float)])


@dataclass
class AugmentedState(CharState):
    """Characteristic state plus the Radon indicator ``q`` and ``y``.

    ``y`` holds the sensitivities of ``Y`` with respect to the starting
    point; the spatial gradient along the characteristic is ``y / q``.
    """

    q: float = 1.0
    y: np.ndarray = None

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.x], self.Y, [self.q], self.y])

    @property
    def gradient(self) -> np.ndarray:
        return np.asarray(self.y) / self.q


def _split(Y, n):
    Y = np.asarray(Y, dtype=float)
    if Y.shape[0] != n:
        raise ValueError(f"expected {n} Y components, got shape {Y.shape}")
    return Y


def _require_domain(sys: SystemDef, x, Y):
    if not sys.domain.contains(x, Y):
        raise DomainExit(f"{sys.name}: state outside domain (x={np.min(x)}..{np.max(x)})")


def _rhs(sys: SystemDef, x, Y, shape):
    dx = _broadcast_nested(sys.Q(x, Y), shape, ())
    dY = _broadcast_nested(sys.S(x, Y), shape, (sys.n,)).reshape((sys.n,) + shape)
    return dx, dY


def eval_rhs(sys: SystemDef, x, Y):
    """Return ``(Q(x, Y), S(x, Y))`` after checking the domain."""
    Y = _split(Y, sys.n)
    _require_domain(sys, x, Y)
    return _rhs(sys, x, Y, np.broadcast(np.asarray(x), Y[0]).shape)


def characteristic_field(sys: SystemDef):
    """Autonomous field ``f(t, s)`` on ``s = (x, Y_1..Y_n)``.

    ``s`` may carry trailing batch dimensions after being reshaped to
    ``(n+1, ...)``; the flat 1-D layout used by the integrator is handled
    here for the single-characteristic case.
    """

    def f(t, s):
        dx, dY = eval_rhs(sys, s[0], s[1:])
        out = np.empty_like(s, dtype=float)
        out[0] = dx
        out[1:] = dY
        return out

    return f


def _fd_partials(sys: SystemDef, x, Y, shape):
    """Central differences for whichever partials the system lacks."""
    n = sys.n
    x = np.broadcast_to(np.asarray(x, dtype=float), shape)
    hx = fd_step(x)
    need_x = sys.Q_x is None or sys.S_x is None
    need_Y = sys.Q_Y is None or sys.S_Y is None
    out = {}
    if need_x:
        _require_domain(sys, x + hx, Y)
        _require_domain(sys, x - hx, Y)
        qp, sp = eval_rhs(sys, x + hx, Y)
        qm, sm = eval_rhs(sys, x - hx, Y)
        out["Q_x"] = (qp - qm) / (2 * hx)
        out["S_x"] = (sp - sm) / (2 * hx)
    if need_Y:
        QY = np.empty((n,) + shape)
        SY = np.empty((n, n) + shape)
        for j in range(n):
            hj = fd_step(Y[j])
            Yp = np.array(Y, dtype=float, copy=True)
            Ym = np.array(Y, dtype=float, copy=True)
            Yp[j] = Y[j] + hj
            Ym[j] = Y[j] - hj
            qp, sp = eval_rhs(sys, x, Yp)
            qm, sm = eval_rhs(sys, x, Ym)
            QY[j] = (qp - qm) / (2 * hj)
            SY[:, j] = (sp - sm) / (2 * hj)
        out["Q_Y"] = QY
        out["S_Y"] = SY
    return out


def eval_linearization(sys: SystemDef, x, Y, *, checked: bool = False) -> np.ndarray:
    """Jacobian of the characteristic field, ``[[Q_x, Q_Y], [S_x, S_Y]]``.

    Returns shape ``(n+1, n+1)`` for a single point or ``(n+1, n+1)+batch``.
    Analytic partials are used where supplied; the rest come from central
    differences with step ``max(1e-6, 1e-6*|value|)``.
    """
    n = sys.n
    Y = _split(Y, n)
    if not checked:
        _require_domain(sys, x, Y)
    shape = np.broadcast(np.asarray(x), Y[0]).shape
    fd = {} if sys.has_partials else _fd_partials(sys, x, Y, shape)

    def part(name, nested_shape):
        fn = getattr(sys, name)
        if fn is None:
            return fd[name]
        return _broadcast_nested(fn(x, Y), shape, nested_shape).reshape(nested_shape + shape)

    J = np.empty((n + 1, n + 1) + shape)
    J[0, 0] = part("Q_x", ())
    J[0, 1:] = part("Q_Y", (n,))
    J[1:, 0] = part("S_x", (n,))
    J[1:, 1:] = part("S_Y", (n, n))
    return J


def check_zero_equilibrium(sys: SystemDef, num: int = 41, tol: float = 1e-12) -> bool:
    """True when ``Q(x,0)=0`` and ``S(x,0)=0`` on a grid of the x-domain.

    Raises
    ------
    InvalidModel
        If the system is flagged as not having a zero equilibrium; such models
        are exempt and the caller must not treat them as compliant.
    """
    if not sys.zero_equilibrium:
        raise InvalidModel(f"{sys.name} is flagged as violating the zero equilibrium")
    xs = sys.domain.sample_x(num)
    zero = np.zeros((sys.n, xs.size))
    dx, dY = eval_rhs(sys, xs, zero)
    return bool(np.all(np.abs(dx) <= tol) and np.all(np.abs(dY) <= tol))


def check_partials(sys: SystemDef, num: int = 100, rtol: float = 1e-6, seed: int = 0,
                   span: float = 1.0) -> float:
    """Compare analytic partials with central differences at random points.

    Returns the worst mixed error ``|a - fd| / max(1, |a|)``; a value at or
    below ``rtol`` means agreement.
    """
    if not sys.has_partials:
        raise ValueError(f"{sys.name} has no analytic partials")
    rng = np.random.default_rng(seed)
    x, Y = sys.domain.sample_box(sys.n, rng, num, span=span)
    analytic = eval_linearization(sys, x, Y)
    stripped = SystemDef(n=sys.n, Q=sys.Q, S=sys.S, name=sys.name, domain=sys.domain)
    numeric = eval_linearization(stripped, x, Y)
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(err.max())


class Trajectory:
    """Dense-output solution of an autonomous or non-autonomous ODE.

    Samples are the accepted step endpoints. Each step ``k`` carries a
    quartic interpolant ``y(t_k + th*h_k) = y_k + h_k * C_k @ [th, th^2, th^3, th^4]``.
    ``status`` is one of ``"t_max"``, ``"event"``, ``"step_underflow"``,
    ``"domain_exit"``.
    """

    def __init__(self, t, y, coeffs=None, status="t_max", events=None):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.coeffs = None if coeffs is None else np.asarray(coeffs, dtype=float)
        self.status = status
        self.events = events or []
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.t.size

    @property
    def dense(self) -> bool:
        return self.coeffs is not None

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def y_final(self) -> np.ndarray:
        return self.y[-1]

    def _step_index(self, t):
        k = np.searchsorted(self.t, t, side="right") - 1
        return np.clip(k, 0, self.t.size - 2)

    def eval_step(self, k: int, t: float) -> np.ndarray:
        h = self.t[k + 1] - self.t[k]
        th = (t - self.t[k]) / h
        powers = np.array([th, th * th, th**3, th**4])
        return self.y[k] + h * (self.coeffs[k] @ powers)

    def __call__(self, t):
        """Interpolated state at scalar ``t`` or at each entry of an array ``t``."""
        if not self.dense:
            raise ValueError("trajectory was integrated without dense output")
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.t[0], self.t[-1]
        span = max(1.0, abs(hi))
        if np.any(ts < lo - 1e-12 * span) or np.any(ts > hi + 1e-12 * span):
            raise ValueError(f"t outside trajectory span [{lo}, {hi}]")
        if self.t.size == 1:
            out = np.repeat(self.y[:1], ts.size, axis=0)
        else:
            out = np.stack([self.eval_step(int(k), s) for k, s in zip(self._step_index(ts), ts)])
        return out[0] if scalar else out

    def component(self, i: int) -> np.ndarray:
        return self.y[:, i]
