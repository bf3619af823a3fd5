"""Period maps, period derivatives, monodromy matrices and isochronicity verdicts."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .core import SystemDef
from .errors import InsufficientPoints, NoReturn
from .integrate import IntegratorConfig, PeriodResult, integrate, measure_period
from .variational import monodromy_field

__all__ = [
    "PeriodEntry",
    "PeriodMap",
    "MonodromyResult",
    "IsochronyVerdict",
    "period_map",
    "period_derivative",
    "monodromy",
    "classify_isochronous",
    "amplitude_family",
    "max_workers",
]

CLOSED_TOL = 1e-6

ISOCHRONOUS = "isochronous"
NON_ISOCHRONOUS = "non_isochronous"
INCONCLUSIVE = "inconclusive"


def max_workers() -> int:
    """Thread cap from ``ISOCHRONE_THREADS`` (default 1, i.e. serial)."""
    try:
        return max(1, int(os.environ.get("ISOCHRONE_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items) -> list:
    """Map preserving input order; threads only when ``ISOCHRONE_THREADS > 1``."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def amplitude_family(x0: float = 1.0, component: int = 1, n: int = 2) -> Callable:
    """Family ``h -> (x0, Y0)`` with ``Y0 = h e_component``."""

    def family(h):
        Y0 = np.zeros(n)
        Y0[component] = h
        return x0, Y0

    family.description = f"x0={x0}, Y[{component}]=h"
    return family


def _initial_state(sys, family, h) -> np.ndarray:
    if isinstance(sys, SystemDef):
        x0, Y0 = family(h)
        return np.concatenate([[x0], np.asarray(Y0, dtype=float)])
    return np.asarray(family(h), dtype=float)


@dataclass
class PeriodEntry:
    h: float
    T: float
    return_error: float
    closed: bool


@dataclass
class PeriodMap:
    entries: List[PeriodEntry]
    family: str = ""

    @property
    def h(self) -> np.ndarray:
        return np.array([e.h for e in self.entries])

    @property
    def T(self) -> np.ndarray:
        return np.array([e.T for e in self.entries])

    @property
    def return_error(self) -> np.ndarray:
        return np.array([e.return_error for e in self.entries])

    @property
    def spread(self) -> float:
        """``max T - min T`` over closed entries (``inf`` if none is closed)."""
        T = np.array([e.T for e in self.entries if e.closed])
        return float(T.max() - T.min()) if T.size else float("inf")


def period_map(sys, family: Callable, h_range, N: int,
               config: IntegratorConfig = IntegratorConfig(), **period_kw) -> PeriodMap:
    """Periods at ``N`` equally spaced family parameters.

    Entries whose orbit does not close to ``1e-6`` are flagged ``closed=False``;
    a missing return becomes ``T = nan`` with infinite return error.
    """
    hs = np.linspace(h_range[0], h_range[1], N)

    def one(h):
        try:
            res = measure_period(sys, _initial_state(sys, family, h), config, **period_kw)
        except NoReturn:
            return PeriodEntry(float(h), float("nan"), float("inf"), False)
        return PeriodEntry(float(h), res.T, res.return_error, res.return_error <= CLOSED_TOL)

    return PeriodMap(parallel_map(one, hs), getattr(family, "description", ""))


def period_derivative(pm: PeriodMap):
    """``(h, T'(h))`` by central differences, one-sided (second order) at the ends."""
    h, T = pm.h, pm.T
    if h.size < 3:
        raise InsufficientPoints("period_derivative needs at least 3 entries")
    return [(float(a), float(b)) for a, b in zip(h, np.gradient(T, h, edge_order=2))]


@dataclass
class MonodromyResult:
    M: np.ndarray
    multipliers: np.ndarray
    dev_identity: float
    period: PeriodResult

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.multipliers)))


def monodromy(sys: SystemDef, x0: float, Y0, config: IntegratorConfig = IntegratorConfig(),
              basis: Optional[np.ndarray] = None) -> MonodromyResult:
    """Fundamental matrix of the full ``(n+1)``-dimensional variational system over one period.

    ``basis`` (columns) defaults to the identity; the returned ``M`` maps the
    chosen initial columns to their values at ``t = T``.
    """
    m = sys.n + 1
    s0 = np.concatenate([[x0], np.asarray(Y0, dtype=float)])
    per = measure_period(sys, s0, config)
    Phi0 = np.eye(m) if basis is None else np.asarray(basis, dtype=float)
    z0 = np.concatenate([s0, Phi0.ravel()])
    traj = integrate(monodromy_field(sys), z0, config.replace(t_max=per.T), dense=False)
    M = traj.y_final[m:].reshape(m, m)
    if basis is not None:
        M = M @ np.linalg.inv(Phi0)
    dev = float(np.linalg.norm(M - np.eye(m), ord=np.inf))
    return MonodromyResult(M, np.linalg.eigvals(M), dev, per)


@dataclass
class IsochronyVerdict:
    verdict: str
    spread: float
    period_map: PeriodMap
    monodromies: list = field(default_factory=list)
    tol_iso: float = 1e-6

    @property
    def max_dev(self) -> float:
        return max((m.dev_identity for m in self.monodromies), default=float("nan"))

    @property
    def max_multiplier_modulus(self) -> float:
        return max((m.max_modulus for m in self.monodromies), default=float("nan"))


def classify_isochronous(sys: SystemDef, family: Callable, h_range, N: int = 6,
                         config: IntegratorConfig = IntegratorConfig(),
                         tol_iso: float = 1e-6) -> IsochronyVerdict:
    """Numerical isochronicity verdict over a one-parameter family of orbits.

    ``isochronous`` when the period spread is at most ``tol_iso`` and the
    monodromy matrices at the first, middle and last parameter deviate from
    the identity by at most ``10 tol_iso``; ``non_isochronous`` when the
    spread is at least ``100 tol_iso`` or a multiplier modulus exceeds
    ``1 + 100 tol_iso``; ``inconclusive`` otherwise.
    """
    pm = period_map(sys, family, h_range, N, config)
    hs = pm.h
    picks = sorted({0, len(hs) // 2, len(hs) - 1})

    def mono(i):
        x0, Y0 = family(hs[i])
        return monodromy(sys, x0, Y0, config)

    monos = parallel_map(mono, picks)
    spread = pm.spread
    devs = max(m.dev_identity for m in monos)
    modulus = max(m.max_modulus for m in monos)
    if spread <= tol_iso and devs <= 10 * tol_iso:
        verdict = ISOCHRONOUS
    elif spread >= 100 * tol_iso or modulus > 1 + 100 * tol_iso:
        verdict = NON_ISOCHRONOUS
    else:
        verdict = INCONCLUSIVE
    return IsochronyVerdict(verdict, spread, pm, monos, tol_iso)
