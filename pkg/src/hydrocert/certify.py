"""Stability, gain and input-to-state certificates for streamwise-constant flows.

A flow is invariant along direction ``m``; the two remaining (in-plane)
directions ``j < i`` are the coordinates of :class:`~hydrocert.poly.Poly2`
slots 0 and 1. Velocity components are ordered ``(u_m, u_j, u_i)`` and the
storage functional uses weights ``(k_m, k_I, k_I)``.

Certificate matrices can be extremely badly scaled (weight ratios beyond
1e12 near the boundaries of interest), so every search runs inside a
balancing loop: unknowns are rescaled by their current magnitudes and the
matrix by a diagonal congruence that normalises its diagonal. Neither step
changes which points are PSD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import sos
from .errors import InputError, SolverError
from .linalg import min_eigenvalue
from .poly import AffinePoly2, Poly2, SymPolyMatrix, monomial_basis
from .sdp import SdpOptions, Status, Verdict, ZMAX, solve

K_FLOOR = 1e-6
NORM_SUM = 3.0
MAX_ROUNDS = 10
RE_TOL = 1e-4
PROBES = 8
SCAN_POINTS = 64
CERT_ITERS = 600  # SOS lifts with a few hundred unknowns need more than the solver default
NO_SLIP, PERIODIC = "no-slip", "periodic"


# --------------------------------------------------------------------------- model

@dataclass(frozen=True)
class Domain:
    """Rectangle in the in-plane coordinates ``(x_j, x_i)``.

    ``bc[s]`` is ``"no-slip"`` or ``"periodic"``; a periodic side's length is
    its period.
    """

    intervals: tuple[tuple[float, float], tuple[float, float]]
    bc: tuple[str, str] = (NO_SLIP, PERIODIC)

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if len(ivs) != 2:
            raise InputError("domain needs exactly two in-plane intervals")
        for a, b in ivs:
            if not (math.isfinite(a) and math.isfinite(b) and b > a):
                raise InputError(f"degenerate interval [{a}, {b}]")
        for kind in self.bc:
            if kind not in (NO_SLIP, PERIODIC):
                raise InputError(f"unknown boundary condition {kind!r}")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "bc", tuple(self.bc))

    @property
    def lengths(self) -> tuple[float, float]:
        return tuple(b - a for a, b in self.intervals)

    @property
    def center(self) -> tuple[float, float]:
        return tuple(0.5 * (a + b) for a, b in self.intervals)

    def box(self) -> sos.SemialgebraicBox:
        periodic = tuple(b - a if kind == PERIODIC else None for (a, b), kind in zip(self.intervals, self.bc))
        return sos.SemialgebraicBox.rectangle(self.intervals, periodic)


def channel(L: float) -> Domain:
    """Walls at ``x_j = -1, 1``, period ``L`` in ``x_i``."""
    if not (math.isfinite(L) and L > 0):
        raise InputError(f"period L must be positive, got {L}")
    return Domain(((-1.0, 1.0), (0.0, float(L))), (NO_SLIP, PERIODIC))


def poincare_constant(domain: Domain) -> float:
    """``pi^2 / D^2`` with ``D^2`` the sum of squared side lengths."""
    return math.pi ** 2 / sum(s * s for s in domain.lengths)


@dataclass(frozen=True)
class FlowProblem:
    """Streamwise-constant laminar flow at one Reynolds number.

    Parameters
    ----------
    domain : Domain
    m : int
        Invariant direction, 1-based.
    profile : Poly2 or str
        Base velocity ``U_m`` in the in-plane coordinates. Strings are parsed
        with the names ``x<j>`` and ``x<i>``; mentioning ``x<m>`` is an error.
    F : array_like
        3x3 matrix of the linear body-force term, 1-based indices as rows.
    Re : float
    """

    domain: Domain
    m: int
    profile: Poly2
    F: np.ndarray
    Re: float

    def __post_init__(self):
        if self.m not in (1, 2, 3):
            raise InputError(f"invariant direction must be 1, 2 or 3, got {self.m}")
        if not (math.isfinite(self.Re) and self.Re > 0):
            raise InputError(f"Reynolds number must be positive and finite, got {self.Re}")
        F = np.array(self.F, dtype=float)
        if F.shape != (3, 3) or not np.all(np.isfinite(F)):
            raise InputError("F must be a finite 3x3 matrix")
        F.setflags(write=False)
        object.__setattr__(self, "F", F)
        prof = self.profile
        if isinstance(prof, str):
            j, i = self.plane
            if f"x{self.m}" in prof.replace(" ", ""):
                raise InputError(f"profile may not depend on the invariant coordinate x{self.m}")
            prof = Poly2.parse(prof, (f"x{j}", f"x{i}"))
        elif not isinstance(prof, Poly2):
            prof = Poly2.const(float(prof))
        object.__setattr__(self, "profile", prof)
        object.__setattr__(self, "Re", float(self.Re))

    @property
    def plane(self) -> tuple[int, int]:
        """1-based in-plane indices ``(j, i)``, ascending."""
        j, i = sorted({1, 2, 3} - {self.m})
        return j, i

    @property
    def order(self) -> tuple[int, int, int]:
        """0-based velocity indices in matrix order ``(m, j, i)``."""
        j, i = self.plane
        return self.m - 1, j - 1, i - 1

    @property
    def C(self) -> float:
        return poincare_constant(self.domain)

    def with_re(self, Re: float) -> "FlowProblem":
        return replace(self, Re=Re)


# ------------------------------------------------------------------ matrix builders

KM, KI = 0, 1


def _m_entries(flow: FlowProblem) -> dict[tuple[int, int], AffinePoly2]:
    """Entries of ``M`` as affine forms in ``(k_m, k_I)`` (unknowns 0 and 1)."""
    F = flow.F
    m, j, i = flow.order
    a = flow.C / flow.Re
    U = flow.profile
    km = lambda p: AffinePoly2.unknown(KM, p)  # noqa: E731
    kI = lambda p: AffinePoly2.unknown(KI, p)  # noqa: E731
    return {
        (0, 0): km(a - F[m, m]),
        (1, 1): kI(a - F[j, j]),
        (2, 2): kI(a - F[i, i]),
        (0, 1): km((U.partial(0) - F[m, j]) * 0.5) + kI(-0.5 * F[j, m]),
        (0, 2): km((U.partial(1) - F[m, i]) * 0.5) + kI(-0.5 * F[i, m]),
        (1, 2): kI(-0.5 * (F[j, i] + F[i, j])),
    }


def build_stability_matrix(flow: FlowProblem, nvars: int = 2) -> SymPolyMatrix:
    """3x3 matrix ``M(x)`` affine in ``(k_m, k_I)``.

    ``nvars`` may exceed 2 when further unknowns follow the weights.
    """
    return SymPolyMatrix(3, nvars, _m_entries(flow))


def _coupled(flow: FlowProblem, nvars: int, shift: dict[int, AffinePoly2],
             corner: dict[int, AffinePoly2]) -> SymPolyMatrix:
    # [[M - shift, -K/2], [-K/2, corner]]
    entries = dict(_m_entries(flow))
    for r, p in shift.items():
        entries[(r, r)] = entries[(r, r)] - p
    weights = (KM, KI, KI)
    for r in range(3):
        entries[(r, r + 3)] = AffinePoly2.unknown(weights[r], -0.5)
        entries[(r + 3, r + 3)] = corner[r]
    return SymPolyMatrix(6, nvars, entries)


def build_gain_matrix(flow: FlowProblem) -> SymPolyMatrix:
    """6x6 matrix ``N`` in ``(k_m, k_I, h_m, h_j, h_i)`` with ``h_l = eta_l^2``."""
    one = AffinePoly2.lift(1.0)
    return _coupled(flow, 5, {r: one for r in range(3)},
                    {r: AffinePoly2.unknown(2 + r) for r in range(3)})


def _psi3(psi) -> tuple[float, float, float]:
    vals = np.broadcast_to(np.asarray(psi, dtype=float), (3,))
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise InputError(f"decay rates psi must be positive, got {psi}")
    return tuple(float(v) for v in vals)


def build_iss_matrix(flow: FlowProblem, psi, sigma_degree: int = 0) -> SymPolyMatrix:
    """6x6 matrix ``P`` with ``Q = diag(psi_m k_m, psi_j k_I, psi_i k_I)``.

    Unknowns are ``(k_m, k_I)`` followed by the supply weights: one constant
    per channel when ``sigma_degree == 0``, otherwise the coefficients of
    ``sigma_l`` over the monomials of :func:`sigma_basis`.
    """
    pm, pj, pi_ = _psi3(psi)
    basis = sigma_basis(flow, sigma_degree)
    nb = len(basis)
    shift = {0: AffinePoly2.unknown(KM, pm), 1: AffinePoly2.unknown(KI, pj), 2: AffinePoly2.unknown(KI, pi_)}
    corner = {}
    for r in range(3):
        acc = AffinePoly2()
        for b, mono in enumerate(basis):
            acc = acc + AffinePoly2.unknown(2 + r * nb + b, Poly2({mono: 1.0}))
        corner[r] = acc
    return _coupled(flow, 2 + 3 * nb, shift, corner)


def sigma_basis(flow: FlowProblem, degree: int) -> list[tuple[int, int]]:
    if degree < 0:
        raise InputError("sigma degree must be non-negative")
    slots = build_stability_matrix(flow).variables()
    return monomial_basis(degree if slots else 0, slots)


def sigma_polys(flow: FlowProblem, z, degree: int) -> list[Poly2]:
    basis = sigma_basis(flow, degree)
    nb = len(basis)
    return [Poly2({mono: z[2 + r * nb + b] for b, mono in enumerate(basis)}) for r in range(3)]


# ---------------------------------------------------------------- balancing driver

@dataclass
class _Task:
    """One certificate search in original units."""

    Ms: list[SymPolyMatrix]
    box: sos.SemialgebraicBox
    center: tuple[float, float]
    groups: list[list[int]]                 # unknowns sharing one scale
    weights: tuple[int, ...] = (KM, KI)     # floored storage weights
    normalize: bool = True
    pin: float | None = None                # k_I = pin * k_m
    cost: np.ndarray | None = None          # minimise cost @ z when given
    relax_degree: int | None = None
    max_degree: int = sos.DEGREE_CAP


@dataclass
class _Outcome:
    verdict: Verdict
    status: Status
    z: np.ndarray
    margin: float
    balance: list[np.ndarray]
    certificates: list[sos.MatrixSosCertificate]
    degree: int | None
    rounds: int
    objective: float = float("nan")


def _diag_balance(M: SymPolyMatrix, z, center) -> np.ndarray:
    d = np.abs(np.diag(M.evaluate(z, center)))
    top = float(np.max(d)) if d.size else 0.0
    if not np.isfinite(top) or top == 0.0:
        return np.ones(M.n)
    # a zero diagonal forces a zero row in any PSD point, so its scale is arbitrary
    d = np.where(d > 1e-300, d, top)
    return 1.0 / np.sqrt(d)


def _group_scales(groups, z, prev) -> np.ndarray:
    S = prev.copy()
    for g in groups:
        s = float(np.max(np.abs(z[g])))
        if np.isfinite(s) and s > 0:
            S[g] = s
    return S


def _attempt(task: _Task, Mh: list[SymPolyMatrix], S: np.ndarray, opts: SdpOptions):
    nz = Mh[0].nvars
    lower = np.full(nz, -ZMAX)
    upper = np.full(nz, ZMAX)
    for w in task.weights:
        lower[w] = K_FLOOR

    def extra(problem):
        rows, rhs = [], []
        if task.normalize:
            row = np.zeros(problem.nvars)
            row[KM], row[KI] = 1.0, 2.0
            rows.append(row)
            rhs.append(NORM_SUM)
        if task.pin is not None:
            row = np.zeros(problem.nvars)
            row[KI], row[KM] = S[KI], -task.pin * S[KM]
            row /= np.max(np.abs(row))
            rows.append(row)
            rhs.append(0.0)
        if rows:
            problem.add_equalities(np.array(rows), np.array(rhs))

    if task.cost is None:
        res = sos.prove(Mh, task.box, task.relax_degree, task.max_degree, opts, lower, upper, extra,
                        accept_tight=False)
        return res.verdict, res.status, res.z, res.margin, res.certificates, res.degree, float("nan")

    # optimisation: raise the degree until the problem becomes feasible
    cost = task.cost * S
    cost = cost / np.max(np.abs(cost))
    deg = max(M.degree() for M in Mh)
    start = task.relax_degree or max(sos.default_degree(M) for M in Mh)
    stop = start if deg <= 0 or task.relax_degree else max(start, task.max_degree)
    for d in range(start, stop + 1):
        problem, decode = sos.compile(Mh, task.box, None if deg <= 0 else d)
        problem.lower[:nz], problem.upper[:nz] = lower, upper
        problem.c[:nz] = cost
        extra(problem)
        sol = solve(problem, opts)
        z, certs = decode(sol.z)
        if sol.ok:
            return Verdict.FEASIBLE, sol.status, z, sol.margin, certs, None if deg <= 0 else d, float(task.cost @ (S * z))
    verdict = Verdict.INFEASIBLE if sol.status is Status.INFEASIBLE else Verdict.MARGINAL
    return verdict, sol.status, z, sol.margin, certs, None if deg <= 0 else d, float("nan")


def _run(task: _Task, z0: np.ndarray, opts: SdpOptions | None = None) -> _Outcome:
    """Balancing loop around one certificate search."""
    opts = opts or SdpOptions(max_iters=CERT_ITERS)
    z = np.asarray(z0, dtype=float).copy()
    S = _group_scales(task.groups, z, np.ones_like(z))
    best = None
    prev_obj = None
    for rnd in range(1, MAX_ROUNDS + 1):
        T = [_diag_balance(M, z, task.center) for M in task.Ms]
        Mh = [M.rescale_unknowns(S).congruence(t) for M, t in zip(task.Ms, T)]
        verdict, status, zh, margin, certs, degree, obj = _attempt(task, Mh, S, opts)
        z_new = S * zh
        out = _Outcome(verdict, status, z_new, margin, T,
                       [c.congruence(1.0 / t) for c, t in zip(certs, T)], degree, rnd, obj)
        # later feasible rounds only improve; never trade a feasible point for a worse one
        if best is None or best.verdict is not Verdict.FEASIBLE:
            best = out
        elif verdict is Verdict.FEASIBLE and not obj > best.objective:
            best = out
        if status is Status.NUMERICAL_FAILURE and verdict is not Verdict.FEASIBLE:
            break
        zh_user = zh[: len(z)]
        at_floor = any(zh_user[w] < 10 * K_FLOOR for w in task.weights)
        at_box = bool(np.any(np.abs(zh_user) > 1e-1 * ZMAX))
        S_new = _group_scales(task.groups, z_new[: len(z)], S)
        moved = float(np.max(np.abs(np.log10(S_new / S)))) if len(S) else 0.0
        if task.cost is None:
            if verdict is Verdict.FEASIBLE:
                break
            if moved < 1.0 and not at_floor and not at_box and rnd > 1:
                break
        else:
            if verdict is Verdict.FEASIBLE:
                if prev_obj is not None and abs(obj - prev_obj) <= 1e-6 * abs(obj) and not at_box:
                    break
                prev_obj = obj
            elif moved < 1.0 and not at_floor and not at_box and rnd > 1:
                break
        z, S = z_new[: len(z)], S_new
    return best


# ------------------------------------------------------------------- certificates

@dataclass
class StabilityCertificate:
    """Outcome of :func:`check_stability`.

    ``k`` and the certificates are the best point found; they certify
    stability only when ``verdict`` is feasible. ``margin`` is measured on
    the balanced matrix ``diag(b) M diag(b)`` with ``b = balance``.
    """

    verdict: Verdict
    k_m: float
    k_I: float
    margin: float
    normalization: str
    status: Status
    balance: np.ndarray
    sos: list[sos.MatrixSosCertificate] = field(default_factory=list)
    degree: int | None = None
    rounds: int = 0

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE


@dataclass
class GainCertificate:
    verdict: Verdict
    k_m: float
    k_I: float
    eta_sq: tuple[float, float, float]
    objective: float
    status: Status
    balance: np.ndarray
    sos: list[sos.MatrixSosCertificate] = field(default_factory=list)
    degree: int | None = None
    rounds: int = 0

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE

    @property
    def eta(self) -> tuple[float, float, float]:
        return tuple(math.sqrt(max(h, 0.0)) for h in self.eta_sq)


@dataclass
class IssCertificate:
    """Outcome of :func:`check_iss`; ``beta1``/``beta2`` are the min/max weights."""

    verdict: Verdict
    k_m: float
    k_I: float
    psi: tuple[float, float, float]
    sigma: list[Poly2]
    margin: float
    status: Status
    balance: list[np.ndarray]
    sos: list[sos.MatrixSosCertificate] = field(default_factory=list)
    degree: int | None = None
    rounds: int = 0

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE

    @property
    def beta1(self) -> float:
        return min(self.k_m, self.k_I)

    @property
    def beta2(self) -> float:
        return max(self.k_m, self.k_I)


def _weight_start(flow: FlowProblem) -> np.ndarray:
    return np.array([1.0, 1.0])


def check_stability(flow: FlowProblem, k_ratio: float | None = None,
                    relax_degree: int | None = None, max_degree: int = sos.DEGREE_CAP,
                    opts: SdpOptions | None = None) -> StabilityCertificate:
    """Search for weights making ``M(x)`` PSD on the domain.

    Parameters
    ----------
    flow : FlowProblem
    k_ratio : float, optional
        Pin ``k_I / k_m`` to this value.
    relax_degree, max_degree : int
        SOS degree policy when ``M`` depends on ``x``.
    """
    if k_ratio is not None and not (math.isfinite(k_ratio) and k_ratio > 0):
        raise InputError(f"k_ratio must be positive, got {k_ratio}")
    M = build_stability_matrix(flow)
    z0 = _weight_start(flow)
    if k_ratio is not None:
        z0 = np.array([1.0, k_ratio])
    task = _Task([M], flow.domain.box(), flow.domain.center, [[KM], [KI]], pin=k_ratio,
                 relax_degree=relax_degree, max_degree=max_degree)
    out = _run(task, z0, opts)
    tag = "k_m + 2 k_I = 3 (balanced units)" + ("" if k_ratio is None else f", k_I/k_m = {k_ratio:.17g}")
    return StabilityCertificate(out.verdict, float(out.z[KM]), float(out.z[KI]), out.margin, tag,
                                out.status, out.balance[0], out.certificates, out.degree, out.rounds)


def minimize_gains(flow: FlowProblem, relax_degree: int | None = None,
                   max_degree: int = sos.DEGREE_CAP, opts: SdpOptions | None = None) -> GainCertificate:
    """Minimise ``eta_1^2 + eta_2^2 + eta_3^2`` subject to ``N(x) >= 0``.

    The weights are free (``N`` is not homogeneous in them).
    """
    N = build_gain_matrix(flow)
    a = flow.C / flow.Re
    z0 = np.array([2.0 / a, 2.0 / a, 1.0, 1.0, 1.0])
    cost = np.array([0.0, 0.0, 1.0, 1.0, 1.0])
    task = _Task([N], flow.domain.box(), flow.domain.center, [[KM], [KI], [2], [3], [4]],
                 normalize=False, cost=cost, relax_degree=relax_degree, max_degree=max_degree)
    out = _run(task, z0, opts)
    h = tuple(float(v) for v in out.z[2:5])
    obj = float(sum(h)) if out.verdict is Verdict.FEASIBLE else float("inf")
    return GainCertificate(out.verdict, float(out.z[KM]), float(out.z[KI]), h, obj, out.status,
                           out.balance[0], out.certificates, out.degree, out.rounds)


def check_iss(flow: FlowProblem, psi, sigma_degree: int = 2, relax_degree: int | None = None,
              max_degree: int = sos.DEGREE_CAP, opts: SdpOptions | None = None) -> IssCertificate:
    """Search for weights and supply weights making ``P(x)`` PSD.

    ``sigma_degree`` only matters when ``M`` depends on ``x``; each
    polynomial ``sigma_l`` then carries its own SOS nonnegativity proof.
    """
    psi3 = _psi3(psi)
    P = build_iss_matrix(flow, psi3, sigma_degree)
    basis = sigma_basis(flow, sigma_degree)
    nb = len(basis)
    Ms = [P]
    if not P.is_constant_in_x():
        for r in range(3):
            entry = AffinePoly2()
            for b, mono in enumerate(basis):
                entry = entry + AffinePoly2.unknown(2 + r * nb + b, Poly2({mono: 1.0}))
            Ms.append(SymPolyMatrix(1, P.nvars, {(0, 0): entry}))
    z0 = np.zeros(P.nvars)
    z0[:2] = 1.0
    for r in range(3):
        z0[2 + r * nb] = 1.0
    groups = [[KM], [KI]] + [list(range(2 + r * nb, 2 + (r + 1) * nb)) for r in range(3)]
    task = _Task(Ms, flow.domain.box(), flow.domain.center, groups,
                 relax_degree=relax_degree, max_degree=max_degree)
    out = _run(task, z0, opts)
    sig = sigma_polys(flow, out.z, sigma_degree)
    return IssCertificate(out.verdict, float(out.z[KM]), float(out.z[KI]), psi3, sig, out.margin,
                          out.status, out.balance, out.certificates, out.degree, out.rounds)


def audit(cert, M: SymPolyMatrix, z, box: sos.SemialgebraicBox, n: int = 1000) -> dict:
    """Independent re-check of a feasible certificate.

    Constant matrices: smallest eigenvalue of the balanced matrix.
    Polynomial matrices: :func:`sos.verify` plus :func:`sos.sample_check`.
    """
    z = np.asarray(z, dtype=float)
    b = cert.balance if isinstance(cert.balance, np.ndarray) else cert.balance[0]
    if M.is_constant_in_x():
        lam = min_eigenvalue(M.congruence(b).evaluate(z))
        return {"passed": lam >= -1e-9, "min_eig": lam}
    rep = sos.verify(cert.sos[0], M, z)
    sampled = sos.sample_check(M.congruence(b), box, n, 0, z)
    return {"passed": rep.passed and sampled >= -1e-6, "min_eig": sampled,
            "gram_min_eig": rep.min_gram_eig, "residual": rep.max_residual}


# ---------------------------------------------------------------------- bisection

def _feasible(checker, family, Re) -> bool:
    return checker(family(Re)).feasible


def _bisect(pred, lo: float, hi: float, tol: float) -> float:
    while hi / lo - 1.0 > tol:
        mid = math.sqrt(lo * hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def boundary_search(pred: Callable[[float], bool], re_lo: float, re_hi: float,
                    tol: float = RE_TOL) -> float:
    """Largest ``Re`` in ``[re_lo, re_hi]`` where ``pred`` still holds.

    Eight log-spaced probes test the monotonicity assumption; when it fails
    a 64-point scan locates the first transition before bisecting it.
    Returns ``inf`` when ``pred(re_hi)`` holds.
    """
    if not (0 < re_lo < re_hi and math.isfinite(re_hi)):
        raise InputError(f"need 0 < re_lo < re_hi, got {re_lo}, {re_hi}")
    if tol <= 0:
        raise InputError("tolerance must be positive")
    grid = np.geomspace(re_lo, re_hi, PROBES)
    verdicts = [pred(float(r)) for r in grid]
    if not verdicts[0]:
        raise InputError(f"no certificate at re_lo = {re_lo:g}; lower the bracket")
    if verdicts[-1] and all(verdicts):
        return math.inf
    first_bad = verdicts.index(False)
    monotone = not any(verdicts[first_bad:])
    if not monotone:
        grid = np.geomspace(re_lo, re_hi, SCAN_POINTS)
        verdicts = [pred(float(r)) for r in grid]
        first_bad = verdicts.index(False)
    return _bisect(pred, float(grid[first_bad - 1]), float(grid[first_bad]), tol)


def critical_reynolds(family: Callable[[float], FlowProblem], re_lo: float = 1e-2,
                      re_hi: float = 1e7, tol: float = RE_TOL, **kw) -> float:
    """Largest Reynolds number with a stability certificate (``inf`` if unbounded)."""
    kw.setdefault("opts", SdpOptions(max_iters=CERT_ITERS, early_exit=True))
    return boundary_search(lambda r: check_stability(family(r), **kw).feasible, re_lo, re_hi, tol)


def iss_reynolds(family: Callable[[float], FlowProblem], psi, re_lo: float = 1e-2,
                 re_hi: float = 1e7, tol: float = RE_TOL, **kw) -> float:
    """Largest Reynolds number with an ISS certificate for decay rates ``psi``."""
    psi3 = _psi3(psi)
    kw.setdefault("opts", SdpOptions(max_iters=CERT_ITERS, early_exit=True))
    return boundary_search(lambda r: check_iss(family(r), psi3, **kw).feasible, re_lo, re_hi, tol)
