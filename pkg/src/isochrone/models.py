"""Ready-made characteristic systems.

Radial cold plasma in dimension ``d`` (optionally with the calibrating
force), the 1-D relativistic plasma and its second-order reduction, the
Hopf equation with a potential, oscillators obtained from an invertible
change of coordinates, and Hamiltonian oscillators built from involutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicHermiteSpline

from .core import Domain, SystemDef, fd_step
from .criteria import InvolutionSpec, LienardSpec, build_involution_potential
from .errors import DomainExit, InvalidModel, SingularTransformation

__all__ = [
    "plasma_radial",
    "plasma_calibrated",
    "relativistic_plasma",
    "relativistic_reduced",
    "RelativisticReduced",
    "hopf_potential",
    "harmonic",
    "transformed_oscillator",
    "involution_hamiltonian",
    "plasma_lienard",
    "relativistic_lienard",
    "ModelSpec",
    "MODEL_KINDS",
    "build_model",
]

BOX = 1e6


def _box(n, bound=BOX):
    return tuple((-bound, bound) for _ in range(n))


def _check_d(d):
    if int(d) != d or d < 1:
        raise InvalidModel(f"dimension d must be an integer >= 1, got {d}")
    return int(d)


def plasma_calibrated(d: int, gamma: float) -> SystemDef:
    """Radial cold plasma with the force ``gamma |V|^2 / r`` added.

    ``x' = x Y2``, ``Y1' = Y2 - d Y1 Y2``, ``Y2' = -Y1 - (1 - gamma) Y2^2``;
    ``Y1`` is the field coefficient and ``Y2`` the velocity coefficient of
    the radial ansatz. Isochronous exactly for ``gamma = 1 - d`` and
    ``gamma = 1 - d/4``.
    """
    d = _check_d(d)
    a = 1.0 - float(gamma)

    def Q(x, Y):
        return x * Y[1]

    def S(x, Y):
        return [Y[1] - d * Y[0] * Y[1], -Y[0] - a * Y[1] ** 2]

    name = f"plasma_radial(d={d})" if gamma == 0 else f"plasma_calibrated(d={d},gamma={gamma})"
    return SystemDef(
        n=2, Q=Q, S=S, name=name,
        domain=Domain((-math.inf, math.inf), _box(2)),
        Q_x=lambda x, Y: Y[1],
        Q_Y=lambda x, Y: [0.0, x],
        S_x=lambda x, Y: [0.0, 0.0],
        S_Y=lambda x, Y: [[-d * Y[1], 1.0 - d * Y[0]], [-1.0, -2.0 * a * Y[1]]],
        params={"kind": "plasma_calibrated", "d": d, "gamma": float(gamma)},
    )


def plasma_radial(d: int) -> SystemDef:
    """Radial cold plasma, ``x' = x Y2, Y1' = Y2 - d Y1 Y2, Y2' = -Y1 - Y2^2``."""
    sys = plasma_calibrated(d, 0.0)
    return replace(sys, params={"kind": "plasma_radial", "d": _check_d(d)})


def plasma_lienard(d: int, gamma: float = 0.0) -> LienardSpec:
    """Lienard form ``Y2'' + (2a+d) Y2 Y2' + Y2 + a d Y2^3 = 0`` with ``a = 1 - gamma``."""
    d = _check_d(d)
    a = 1.0 - float(gamma)
    return LienardSpec(f=lambda z: (2 * a + d) * z, g=lambda z: z + a * d * z**3,
                       g_prime0=1.0, interval=(-1.0, 1.0), name=f"plasma_lienard(d={d},gamma={gamma})")


def _as_profile(c, c_prime=None):
    if callable(c):
        if c_prime is None:
            def c_prime(x):
                h = fd_step(x)
                return (c(x + h) - c(x - h)) / (2 * h)
        return c, c_prime, None
    c0 = float(c)
    if not c0 > 0:
        raise InvalidModel(f"doping profile must be positive, got {c0}")
    return (lambda x: c0 + 0.0 * np.asarray(x, dtype=float)), (lambda x: 0.0 * np.asarray(x, dtype=float)), c0


def relativistic_plasma(c=1.0, c_prime: Optional[Callable] = None,
                        interval=(-math.inf, math.inf)) -> SystemDef:
    """1-D relativistic cold plasma along characteristics, ``Y = (P, E)``.

    ``x' = P / sqrt(1+P^2)``, ``P' = -E``, ``E' = c(x) P / sqrt(1+P^2)``.
    ``c`` is a positive constant or a callable doping profile valid on ``interval``.
    """
    cf, cpf, c0 = _as_profile(c, c_prime)
    if c0 is None:
        lo, hi = interval
        probe = np.linspace(max(lo, -10.0), min(hi, 10.0), 201)[1:-1]
        if np.any(np.asarray(cf(probe)) <= 0):
            raise InvalidModel("doping profile must be positive on its interval")

    def V(P):
        return P / np.sqrt(1.0 + P * P)

    def dV(P):
        return (1.0 + P * P) ** -1.5

    return SystemDef(
        n=2, name="relativistic_plasma" + (f"(c={c0})" if c0 is not None else ""),
        Q=lambda x, Y: V(Y[0]),
        S=lambda x, Y: [-Y[1], cf(x) * V(Y[0])],
        domain=Domain(tuple(interval), _box(2)),
        Q_x=lambda x, Y: 0.0,
        Q_Y=lambda x, Y: [dV(Y[0]), 0.0],
        S_x=lambda x, Y: [0.0, cpf(x) * V(Y[0])],
        S_Y=lambda x, Y: [[0.0, -1.0], [cf(x) * dV(Y[0]), 0.0]],
        params={"kind": "relativistic", "c": c0 if c0 is not None else "profile"},
    )


def relativistic_lienard(c0: float = 1.0) -> LienardSpec:
    """Momentum equation ``P'' + c0 P / sqrt(1+P^2) = 0`` for a constant profile."""
    return LienardSpec(f=lambda z: 0.0 * z, g=lambda z: c0 * z / math.sqrt(1.0 + z * z),
                       g_prime0=c0, interval=(-10.0, 10.0), name=f"relativistic_lienard(c={c0})")


@dataclass
class RelativisticReduced:
    """Second-order form ``x'' = -E(x) (1 - x'^2)^(3/2)`` of the relativistic system.

    ``E(x) = E0 + int_{x0}^x c`` is tabulated once on ``interval`` and
    interpolated by Hermite cubics using ``c`` itself as the slope.
    ``Phi(x) = sqrt(1+P0^2) - int_{x0}^x E`` is the Lorentz factor along the
    characteristic, so ``1 - x'^2 = 1/Phi(x)^2`` should hold on trajectories.
    """

    c: Callable
    x0: float
    P0: float
    E0: float
    interval: tuple
    grid: int = 2001
    _E: CubicHermiteSpline = field(init=False, repr=False)
    _Phi_int: Callable = field(init=False, repr=False)

    def __post_init__(self):
        lo, hi = self.interval
        if not lo < self.x0 < hi:
            raise InvalidModel("x0 must lie inside the working interval")
        xs = np.linspace(lo, hi, self.grid)
        i0 = int(np.searchsorted(xs, self.x0))
        xs = np.insert(xs, i0, self.x0) if xs[i0] != self.x0 else xs
        i0 = int(np.searchsorted(xs, self.x0))
        cs = np.array([self.c(x) for x in xs], dtype=float)
        pieces = np.array([quad(self.c, a, b, epsabs=1e-14, epsrel=1e-13)[0]
                           for a, b in zip(xs[:-1], xs[1:])])
        cum = np.concatenate([[0.0], np.cumsum(pieces)])
        E = self.E0 + cum - cum[i0]
        self._E = CubicHermiteSpline(xs, E, cs)
        self._Phi_int = self._E.antiderivative()

    @property
    def v0(self) -> float:
        return self.P0 / math.sqrt(1.0 + self.P0**2)

    @property
    def state0(self) -> np.ndarray:
        return np.array([self.x0, self.v0])

    def E(self, x):
        return self._E(x)

    def Phi(self, x):
        return math.sqrt(1.0 + self.P0**2) - (self._Phi_int(x) - self._Phi_int(self.x0))

    def field(self, t, s):
        x, v = s[0], s[1]
        lo, hi = self.interval
        if not (lo < x < hi) or not abs(v) < 1.0:
            raise DomainExit(f"relativistic reduction left its domain (x={x}, v={v})")
        return np.array([v, -self._E(x) * (1.0 - v * v) ** 1.5])


def relativistic_reduced(c=1.0, x0: float = 0.0, P0: float = 0.5, E0: float = 0.0,
                         interval=None) -> RelativisticReduced:
    cf, _, _ = _as_profile(c)
    if interval is None:
        interval = (x0 - 5.0, x0 + 5.0)
    return RelativisticReduced(cf, float(x0), float(P0), float(E0), tuple(interval))


def hopf_potential() -> SystemDef:
    """Hopf equation with a potential: ``x' = Y, Y' = -x``.

    Flagged ``zero_equilibrium=False``: ``S(x, 0) = -x`` does not vanish, which
    is why every gradient blows up even though the characteristics are
    isochronous.
    """
    return SystemDef(
        n=1, Q=lambda x, Y: Y[0], S=lambda x, Y: [-x], name="hopf_potential",
        domain=Domain((-BOX, BOX), _box(1)),
        Q_x=lambda x, Y: 0.0, Q_Y=lambda x, Y: [1.0],
        S_x=lambda x, Y: [-1.0], S_Y=lambda x, Y: [[0.0]],
        zero_equilibrium=False, params={"kind": "hopf_potential"},
    )


def involution_hamiltonian(spec: InvolutionSpec) -> SystemDef:
    """``x' = Y, Y' = -g(x)`` with ``g`` from :func:`build_involution_potential`.

    Like the Hopf model this has no zero equilibrium in the ``(x, Y)`` sense
    and carries the same flag.
    """
    _, g = build_involution_potential(spec)
    g_vec = np.vectorize(g, otypes=[float])
    return SystemDef(
        n=1, Q=lambda x, Y: Y[0], S=lambda x, Y: [-g_vec(x)], name=f"involution[{spec.name}]",
        domain=Domain(tuple(spec.J), _box(1)),
        zero_equilibrium=False,
        params={"kind": "involution_hamiltonian", "omega": spec.omega, "H": spec.name},
    )


def _fd_jacobian(F1, F2):
    def jac(Z1, Z2):
        h1, h2 = fd_step(Z1), fd_step(Z2)
        return [[(F(Z1 + h1, Z2) - F(Z1 - h1, Z2)) / (2 * h1),
                 (F(Z1, Z2 + h2) - F(Z1, Z2 - h2)) / (2 * h2)] for F in (F1, F2)]
    return jac


def transformed_oscillator(F1: Callable, F2: Callable, jac: Optional[Callable] = None,
                           radius: float = 1.0, name: str = "transformed") -> SystemDef:
    """Linear oscillator ``X1' = X2, X2' = -X1`` seen through ``X = F(Z)``.

    ``Z1' = D1/D``, ``Z2' = D2/D`` with ``D = det dF/dZ``,
    ``D1 = det[[F2, dF1/dZ2], [-F1, dF2/dZ2]]`` and
    ``D2 = det[[dF1/dZ1, F2], [dF2/dZ1, -F1]]``.  The passive position obeys
    ``x' = x F1(Z)``, which keeps ``Q(x, 0) = 0`` and makes ``x`` periodic with
    the oscillator. ``jac(Z1, Z2)`` returns ``[[dF1/dZ1, dF1/dZ2], [dF2/dZ1, dF2/dZ2]]``.

    Raises
    ------
    SingularTransformation
        If ``|D| < 1e-10`` on the sample disc of ``radius`` or at any evaluated state.
    """
    if abs(F1(0.0, 0.0)) > 1e-12 or abs(F2(0.0, 0.0)) > 1e-12:
        raise InvalidModel("transformation must fix the origin")
    jac = jac or _fd_jacobian(F1, F2)

    def parts(Y):
        Z1, Z2 = Y[0], Y[1]
        (a, b), (c, d) = jac(Z1, Z2)
        a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
        det = a * d - b * c
        if np.any(np.abs(det) < 1e-10):
            raise SingularTransformation(f"{name}: Jacobian determinant vanished")
        f1, f2 = F1(Z1, Z2), F2(Z1, Z2)
        d1 = f2 * d + f1 * b
        d2 = -a * f1 - f2 * c
        return f1, d1 / det, d2 / det

    r = np.linspace(-radius, radius, 11)
    Z1, Z2 = np.meshgrid(r, r)
    parts(np.array([Z1.ravel(), Z2.ravel()]))

    def Q_Y(x, Y):
        (a, b), _ = jac(Y[0], Y[1])
        return [x * np.asarray(a, dtype=float), x * np.asarray(b, dtype=float)]

    # x enters only through the passive factor; S_Y is left to differences
    return SystemDef(
        n=2, name=name,
        Q=lambda x, Y: x * parts(Y)[0],
        S=lambda x, Y: list(parts(Y)[1:]),
        Q_x=lambda x, Y: F1(Y[0], Y[1]),
        S_x=lambda x, Y: [0.0, 0.0],
        Q_Y=Q_Y,
        domain=Domain((-math.inf, math.inf), _box(2, radius)),
        params={"kind": "transformed", "name": name},
    )


def harmonic() -> SystemDef:
    """Identity transformation: ``Z1' = Z2, Z2' = -Z1`` plus the passive ``x``."""
    return transformed_oscillator(lambda a, b: a, lambda a, b: b,
                                  jac=lambda a, b: [[1.0, 0.0], [0.0, 1.0]], name="harmonic")


@dataclass
class ModelSpec:
    """Model kind plus parameters; :meth:`build` returns the ``SystemDef``."""

    kind: str
    params: dict = field(default_factory=dict)

    def build(self) -> SystemDef:
        return build_model(self.kind, **self.params)


def _build_transformed(example: str = "quadratic", **_):
    examples = {
        "identity": (lambda a, b: a, lambda a, b: b, lambda a, b: [[1.0, 0.0], [0.0, 1.0]]),
        "quadratic": (lambda a, b: a + b * b, lambda a, b: b,
                      lambda a, b: [[1.0, 2.0 * b], [0.0, 1.0]]),
        "swap": (lambda a, b: b, lambda a, b: a, lambda a, b: [[0.0, 1.0], [1.0, 0.0]]),
    }
    if example not in examples:
        raise InvalidModel(f"unknown transformation {example!r}; choose from {sorted(examples)}")
    F1, F2, jac = examples[example]
    return transformed_oscillator(F1, F2, jac, name=f"transformed({example})", radius=0.5)


def _build_involution(a: float = 0.3, omega: float = 1.0, **_):
    from .criteria import mobius_involution, reflection
    spec = reflection(omega) if a == 0 else mobius_involution(a, omega)
    return involution_hamiltonian(spec)


MODEL_KINDS = {
    "plasma_radial": lambda d=1, **_: plasma_radial(d),
    "plasma_calibrated": lambda d=3, gamma=0.0, **_: plasma_calibrated(d, gamma),
    "relativistic": lambda c=1.0, **_: relativistic_plasma(c),
    "hopf_potential": lambda **_: hopf_potential(),
    "harmonic": lambda **_: harmonic(),
    "transformed": _build_transformed,
    "involution_hamiltonian": _build_involution,
}

ALIASES = {"plasma": "plasma_radial", "calibrated": "plasma_calibrated", "hopf": "hopf_potential",
           "relativistic_plasma": "relativistic", "involution": "involution_hamiltonian"}


def build_model(kind: str, **params) -> SystemDef:
    kind = ALIASES.get(kind, kind)
    if kind not in MODEL_KINDS:
        raise InvalidModel(f"unknown model kind {kind!r}")
    return MODEL_KINDS[kind](**params)
