"""Canonical flows and closed-form oracles.

The oracles use only closed forms and dense grids, never the SDP stack, so
they can audit it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .certify import FlowProblem, channel, poincare_constant
from .errors import InputError
from .poly import Poly2


@dataclass(frozen=True)
class RotatingCouetteParams:
    Ro: float = 0.0
    L: float = math.pi

    def __post_init__(self):
        if not (math.isfinite(self.Ro) and 0.0 <= self.Ro <= 1.0):
            raise InputError(f"rotation number must lie in [0, 1], got {self.Ro}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise InputError(f"period L must be positive, got {self.L}")

    @property
    def C(self) -> float:
        return poincare_constant(channel(self.L))


def rotating_couette(p: RotatingCouetteParams, Re: float) -> FlowProblem:
    """Plane Couette flow ``U_1 = x_2`` with Coriolis coupling ``Ro``."""
    F = np.array([[0.0, p.Ro, 0.0], [-p.Ro, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return FlowProblem(channel(p.L), 1, Poly2.var(0), F, Re)


def couette(L: float, Re: float) -> FlowProblem:
    return rotating_couette(RotatingCouetteParams(0.0, L), Re)


def poiseuille_like(L: float, Re: float) -> FlowProblem:
    """``U_1 = 1 - x_2^2`` without body force."""
    x2 = Poly2.var(0)
    return FlowProblem(channel(L), 1, 1 - x2 * x2, np.zeros((3, 3)), Re)


def analytic_recrit(p: RotatingCouetteParams) -> float:
    """``C / sqrt(Ro (1 - Ro))``; ``inf`` for plain Couette (Ro = 0 or 1)."""
    if p.Ro in (0.0, 1.0):
        return math.inf
    return p.C / math.sqrt(p.Ro * (1.0 - p.Ro))


def grid_recrit(p: RotatingCouetteParams, n: int = 200001) -> float:
    """Dense-grid version of :func:`analytic_recrit`.

    For ratio ``r = k_2 / k_1`` the 2x2 block is PSD iff
    ``Re <= 2 C sqrt(r) / (r Ro + 1 - Ro)``; maximise over a log grid of r.
    """
    r = np.geomspace(1e-6, 1e6, n)
    re = 2.0 * p.C * np.sqrt(r) / (r * p.Ro + 1.0 - p.Ro)
    return float(np.max(re))


def couette_min_k_ratio(Re: float, C: float) -> float:
    """Smallest ``k_2 / k_1`` certifying plane Couette flow at ``Re``."""
    if not (Re >= 0 and C > 0):
        raise InputError("need Re >= 0 and C > 0")
    return (Re / (2.0 * C)) ** 2


def analytic_iss_limit(psi: float, C: float) -> float:
    """Supremum of ``Re`` with ``M - Q >= 0`` for plane Couette: ``C / psi``."""
    if not (psi > 0 and C > 0):
        raise InputError("need psi > 0 and C > 0")
    if psi >= C:
        return 0.0
    return C / psi


def grid_iss_limit(psi: float, C: float, n: int = 4001) -> float:
    """Dense-grid audit of :func:`analytic_iss_limit`.

    ``M - Q`` has diagonal ``k (C/Re - psi)`` and off-diagonal ``k_1/2``;
    for each ``Re`` on a grid it is PSD for some ratio iff the diagonal is
    positive, since a large enough ratio then covers the off-diagonal.
    """
    re = np.geomspace(1e-3, 1e8, n)
    b = C / re - psi
    ok = b > 0
    return float(re[ok].max()) if ok.any() else 0.0


def rotating_iss_limit(p: RotatingCouetteParams, psi: float) -> float:
    """``C / (psi + sqrt(Ro (1 - Ro)))``, the rotating analogue of ``C / psi``."""
    return p.C / (psi + math.sqrt(p.Ro * (1.0 - p.Ro)))


# ---------------------------------------------------------------- gain oracle

def _schur_gain(k1: np.ndarray, k2: np.ndarray, a: float) -> np.ndarray:
    """Minimal ``sum(eta^2)`` for plane Couette at fixed weights (vectorised).

    With ``A = M - I`` PD the 6x6 matrix is PSD iff
    ``diag(h) >= W = K A^-1 K / 4``. The first two channels couple through
    ``W_12``; the cheapest diagonal dominating a 2x2 PSD block adds
    ``2|W_12|`` to its trace. Channel 3 decouples.
    """
    d1 = k1 * a - 1.0
    d2 = k2 * a - 1.0
    det = d1 * d2 - 0.25 * k1 * k1
    ok = (d1 > 0) & (d2 > 0) & (det > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        W11 = 0.25 * k1 * k1 * d2 / det
        W22 = 0.25 * k2 * k2 * d1 / det
        W12 = 0.25 * k1 * k2 * (-0.5 * k1) / det
        W33 = 0.25 * k2 * k2 / d2
        total = W11 + W22 + 2.0 * np.abs(W12) + W33
    return np.where(ok, total, np.inf)


def couette_gain_oracle(Re: float, L: float = math.pi, n: int = 401, zooms: int = 6) -> dict:
    """Minimal gain objective for plane Couette by grid search over ``(k1, k2)``.

    Returns the objective and the minimising weights.
    """
    C = poincare_constant(channel(L))
    a = C / Re
    # centre the first grid on the scaling regime k1 ~ 1/a, k2 ~ 1/a^3
    lc1, lc2 = math.log10(1.0 / a), math.log10(1.0 / a ** 3)
    half = 4.0
    best = (math.inf, None, None)
    for _ in range(zooms + 1):
        g1 = np.logspace(lc1 - half, lc1 + half, n)
        g2 = np.logspace(lc2 - half, lc2 + half, n)
        K1, K2 = np.meshgrid(g1, g2, indexing="ij")
        vals = _schur_gain(K1, K2, a)
        idx = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[idx] < best[0]:
            best = (float(vals[idx]), float(K1[idx]), float(K2[idx]))
        lc1, lc2 = math.log10(best[1]), math.log10(best[2])
        half = 4.0 * (2.0 * half / (n - 1))  # four cells of the previous grid
    return {"objective": best[0], "k1": best[1], "k2": best[2]}


# ----------------------------------------------------------------- registry

def _rc(ro: float, L: float) -> Callable[[float], FlowProblem]:
    p = RotatingCouetteParams(ro, L)
    return lambda Re: rotating_couette(p, Re)


def _couette(ro: float, L: float) -> Callable[[float], FlowProblem]:
    RotatingCouetteParams(0.0, L)
    return lambda Re: couette(L, Re)


def _poiseuille(ro: float, L: float) -> Callable[[float], FlowProblem]:
    RotatingCouetteParams(0.0, L)
    return lambda Re: poiseuille_like(L, Re)


REGISTRY: dict[str, Callable[[float, float], Callable[[float], FlowProblem]]] = {
    "rotating-couette": _rc,
    "couette": _couette,
    "poiseuille-like": _poiseuille,
}


def family(name: str, ro: float = 0.0, L: float = math.pi,
           profile: str | None = None) -> Callable[[float], FlowProblem]:
    """Flow family ``Re -> FlowProblem`` looked up by registry name.

    ``profile`` replaces the base velocity, written in ``x2``/``x3``.
    """
    try:
        maker = REGISTRY[name]
    except KeyError:
        raise InputError(f"unknown flow {name!r}; choose from {', '.join(REGISTRY)}") from None
    fam = maker(float(ro), float(L))
    if not profile:
        return fam
    base = fam(1.0)
    prof = replace(base, profile=profile).profile  # parse once, validating names
    return lambda Re: replace(fam(Re), profile=prof)
