"""Closed-form isochronicity criteria for planar centers.

* Sabatini's function ``tau`` for Lienard equations ``z'' + f(z) z' + g(z) = 0``.
* Zampieri's construction of isochronous potentials from involutions.
* The candidate doping profile that would make relativistic oscillations
  isochronous, and a scanner that exhibits its loss of positivity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidModel, QuadratureFailure

__all__ = [
    "adaptive_simpson",
    "LienardSpec",
    "sabatini_tau",
    "sabatini_verdict",
    "InvolutionSpec",
    "build_involution_potential",
    "reflection",
    "mobius_involution",
    "doping_profile_candidate",
    "check_positivity_fails",
]

ISOCHRONOUS_CENTER = "isochronous_center"
NOT_ISOCHRONOUS = "not_isochronous"
HYPOTHESES_VIOLATED = "hypotheses_violated"


def _simpson(fa, fm, fb, a, b):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    Raises
    ------
    QuadratureFailure
        If the recursion depth is exhausted before reaching ``tol``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = _simpson(fa, fm, fb, a, b)
    # explicit stack avoids Python's recursion limit
    stack = [(a, b, fa, fm, fb, whole, tol, max_depth)]
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = _simpson(fa, flm, fm, a, m)
        right = _simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        elif depth <= 0:
            raise QuadratureFailure(f"adaptive Simpson did not converge on [{a}, {b}]")
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2, depth - 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2, depth - 1))
    return sign * total


def _derivative(fn, x, h=1e-5):
    return (fn(x + h) - fn(x - h)) / (2 * h)


@dataclass
class LienardSpec:
    """Lienard equation ``z'' + f(z) z' + g(z) = 0`` on a validity interval.

    ``g_prime0`` defaults to a central difference of ``g`` at zero.
    """

    f: Callable[[float], float]
    g: Callable[[float], float]
    g_prime0: Optional[float] = None
    interval: tuple = (-1.0, 1.0)
    name: str = "lienard"

    def __post_init__(self):
        if self.g_prime0 is None:
            self.g_prime0 = _derivative(self.g, 0.0)
        if abs(self.f(0.0)) > 1e-12 or abs(self.g(0.0)) > 1e-12:
            raise InvalidModel("Lienard spec requires f(0) = g(0) = 0")
        if not self.g_prime0 > 0:
            raise InvalidModel(f"Lienard spec requires g'(0) > 0, got {self.g_prime0}")


def sabatini_tau(spec: LienardSpec, z: float, tol: float = 1e-12) -> float:
    """``tau(z) = (int_0^z s f(s) ds)^2 - z^3 (g(z) - g'(0) z)``."""
    lo, hi = spec.interval
    if not lo <= z <= hi:
        raise ValueError(f"z={z} outside validity interval {spec.interval}")
    moment = adaptive_simpson(lambda s: s * spec.f(s), 0.0, z, tol=tol)
    return moment * moment - z**3 * (spec.g(z) - spec.g_prime0 * z)


def sabatini_verdict(spec: LienardSpec, interval=None, samples: int = 41,
                     tol: float = 1e-8) -> str:
    """Isochronous-center verdict from oddness of ``f, g`` and the sign of ``tau``.

    Returns one of ``"isochronous_center"``, ``"not_isochronous"`` or
    ``"hypotheses_violated"`` (``f`` or ``g`` not odd on the sample grid).
    """
    a = min(-spec.interval[0], spec.interval[1]) if interval is None else max(map(abs, interval))
    zs = np.linspace(-a, a, 2 * (samples // 2) + 1)
    for fn in (spec.f, spec.g):
        for z in zs:
            if abs(fn(z) + fn(-z)) > tol * max(1.0, abs(fn(z))):
                return HYPOTHESES_VIOLATED
    taus = np.array([sabatini_tau(spec, z) for z in zs])
    scale = float(np.max(zs**6))
    return ISOCHRONOUS_CENTER if np.max(np.abs(taus)) <= tol * scale else NOT_ISOCHRONOUS


@dataclass
class InvolutionSpec:
    """Involution ``H`` of an interval ``J`` with ``H(0)=0, H'(0)=-1, H(H(x))=x``."""

    H: Callable[[float], float]
    J: tuple
    omega: float = 1.0
    H_prime: Optional[Callable[[float], float]] = None
    name: str = "involution"

    def __post_init__(self):
        lo, hi = self.J
        if not lo < 0 < hi:
            raise InvalidModel("interval J must contain 0")
        if not self.omega > 0:
            raise InvalidModel("omega must be positive")
        if abs(self.H(0.0)) > 1e-8:
            raise InvalidModel("involution must fix the origin")
        if abs(self.derivative(0.0) + 1.0) > 1e-8:
            raise InvalidModel("involution must satisfy H'(0) = -1")
        pad = 1e-3 * (hi - lo)
        xs = np.linspace(lo + pad, hi - pad, 100)
        if np.max(np.abs(np.array([self.H(self.H(x)) for x in xs]) - xs)) > 1e-8:
            raise InvalidModel("H(H(x)) != x on the sample grid")

    def derivative(self, x):
        if self.H_prime is not None:
            return self.H_prime(x)
        return _derivative(self.H, x, 1e-5)


def build_involution_potential(spec: InvolutionSpec):
    """Potential ``V = (omega^2/8)(x - H(x))^2`` and restoring force ``g = V'``.

    ``x'' = -g(x)`` then has an isochronous center at the origin with period
    ``2 pi / omega`` and ``g'(0) = omega^2``.
    """
    w2 = spec.omega**2

    def V(x):
        return w2 / 8.0 * (x - spec.H(x)) ** 2

    def g(x):
        return w2 / 4.0 * (x - spec.H(x)) * (1.0 - spec.derivative(x))

    return V, g


def reflection(omega: float = 1.0) -> InvolutionSpec:
    return InvolutionSpec(lambda x: -x, (-10.0, 10.0), omega,
                          H_prime=lambda x: -1.0, name="reflection")


def mobius_involution(a: float, omega: float = 1.0, J=(-1.0, 1.0)) -> InvolutionSpec:
    """``H(x) = -x / (1 + a x)``, an involution wherever ``1 + a x != 0``."""
    return InvolutionSpec(lambda x: -x / (1.0 + a * x), tuple(J), omega,
                          H_prime=lambda x: -1.0 / (1.0 + a * x) ** 2, name=f"mobius({a})")


def doping_profile_candidate(K: float, M: float, x0: float, x):
    """``c(x) = K (M - 2K (x-x0)^2) / (M + K (x-x0)^2)^(5/2)``, the positive branch."""
    if not (K > 0 and M > 0):
        raise InvalidModel("K and M must be positive")
    u = (np.asarray(x, dtype=float) - x0) ** 2
    return K * (M - 2 * K * u) / (M + K * u) ** 2.5


def check_positivity_fails(profile: Callable, interval, samples: int = 1001,
                           xtol: float = 1e-12) -> Optional[float]:
    """Locate where ``profile`` stops being positive.

    The grid is scanned left to right; at the first sign change between
    neighbouring samples the crossing is bisected to ``xtol`` and the
    endpoint on the negative side is returned, so ``profile(witness) < 0``.
    A profile negative on the whole grid yields the left end; ``None`` means
    no negative sample was found.
    """
    xs = np.linspace(interval[0], interval[1], samples)
    vals = np.array([profile(x) for x in xs], dtype=float)
    if not np.any(vals < 0):
        return None
    for i in range(samples - 1):
        neg_l, neg_r = vals[i] < 0, vals[i + 1] < 0
        if neg_l == neg_r:
            continue
        lo, hi = xs[i], xs[i + 1]
        neg_side_left = neg_l
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            if (profile(mid) < 0) == neg_side_left:
                lo = mid
            else:
                hi = mid
        return float(lo if neg_side_left else hi)
    return float(xs[0])
