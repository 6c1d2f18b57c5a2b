"""Small dense semidefinite programs in LMI form.

Problems are

    minimize    c^T z
    subject to  F0_b + sum_i z_i F_ib  >= 0     for every block b
                E z = g
                lower <= z <= upper             (default |z_i| <= zmax)

and are solved by a primal log-barrier method: equalities are eliminated
through a null-space basis, Newton steps are damped by backtracking, and the
barrier weight grows tenfold between centering passes. A phase-I problem
(maximize a uniform eigenvalue shift ``t``) provides both the feasibility
margin and the interior starting point for the main solve.
"""

from __future__ import annotations

import enum
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.optimize import linprog

from .errors import InputError
from .linalg import min_eigenvalue

log = logging.getLogger(__name__)

ZMAX = 1e6
FEAS_TOL = 1e-8


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"
    ITERATION_LIMIT = "iteration_limit"


class Verdict(str, enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    MARGINAL = "marginal"


@dataclass
class LmiBlock:
    """One constraint ``F0 + sum_i z_i F[i] >= 0``; ``F`` has shape (nvars, d, d)."""

    F0: np.ndarray
    F: np.ndarray

    @property
    def dim(self) -> int:
        return self.F0.shape[0]

    def at(self, z) -> np.ndarray:
        if self.F.shape[0] == 0:
            return self.F0.copy()
        return self.F0 + np.tensordot(np.asarray(z, dtype=float), self.F, axes=1)


@dataclass
class SdpProblem:
    nvars: int
    c: np.ndarray
    blocks: list[LmiBlock]
    E: np.ndarray
    g: np.ndarray
    zmax: float = ZMAX
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        n = int(self.nvars)
        self.nvars = n
        self.c = np.zeros(n) if self.c is None else np.asarray(self.c, dtype=float).reshape(n)
        self.E = np.zeros((0, n)) if self.E is None else np.atleast_2d(np.asarray(self.E, dtype=float))
        if self.E.size == 0:
            self.E = np.zeros((0, n))
        self.g = np.asarray(self.g if self.g is not None else np.zeros(0), dtype=float).reshape(-1)
        if not (np.isfinite(self.zmax) and self.zmax > 0):
            raise InputError("zmax must be finite and positive")
        self.lower = np.full(n, -self.zmax) if self.lower is None else np.asarray(self.lower, dtype=float).copy()
        self.upper = np.full(n, self.zmax) if self.upper is None else np.asarray(self.upper, dtype=float).copy()
        self.validate()

    @classmethod
    def empty(cls, nvars: int, zmax: float = ZMAX) -> "SdpProblem":
        return cls(nvars, np.zeros(nvars), [], None, None, zmax=zmax)

    def validate(self) -> None:
        n = self.nvars
        if self.E.shape[1] != n:
            raise InputError(f"equality matrix has {self.E.shape[1]} columns, expected {n}")
        if self.E.shape[0] != self.g.shape[0]:
            raise InputError("equality matrix and right-hand side disagree in length")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise InputError("bounds must have one entry per variable")
        if np.any(self.lower >= self.upper):
            raise InputError("every lower bound must be strictly below its upper bound")
        for k, b in enumerate(self.blocks):
            b.F0 = np.asarray(b.F0, dtype=float)
            b.F = np.asarray(b.F, dtype=float).reshape(n, *b.F0.shape) if n else np.zeros((0, *b.F0.shape))
            d = b.F0.shape[0]
            if b.F0.shape != (d, d) or b.F.shape != (n, d, d):
                raise InputError(f"block {k} matrices do not share one square dimension")
            if not (np.allclose(b.F0, b.F0.T) and np.allclose(b.F, np.swapaxes(b.F, 1, 2))):
                raise InputError(f"block {k} is not symmetric")
        for arr in (self.c, self.E, self.g):
            if not np.all(np.isfinite(arr)):
                raise InputError("problem data must be finite")

    def add_block(self, F0, F) -> None:
        self.blocks.append(LmiBlock(np.asarray(F0, dtype=float), np.asarray(F, dtype=float)))
        self.validate()

    def add_equalities(self, E, g) -> None:
        E = np.atleast_2d(np.asarray(E, dtype=float))
        self.E = np.vstack([self.E, E])
        self.g = np.concatenate([self.g, np.asarray(g, dtype=float).reshape(-1)])
        self.validate()

    def block_min_eigs(self, z) -> list[float]:
        return [min_eigenvalue(b.at(z)) for b in self.blocks]


@dataclass(frozen=True)
class SdpOptions:
    gap_tol: float = 1e-8
    max_iters: int = 200
    feas_tol: float = FEAS_TOL
    margin_abs_tol: float = 1e-11
    margin_rel_tol: float = 1e-9
    # stop phase I once the sign of t_star is settled (t_star is then only bounded)
    early_exit: bool = False
    z_start: tuple | None = None


@dataclass
class SdpSolution:
    status: Status
    z: np.ndarray
    objective: float
    block_min_eigs: list[float]
    gap: float
    margin: float = float("nan")
    iterations: int = 0
    equality_residual: float = 0.0
    history: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)


@dataclass
class MarginResult:
    t_star: float
    z: np.ndarray
    verdict: Verdict
    status: Status
    upper_bound: float
    iterations: int = 0
    history: list[tuple[int, float, float]] = field(default_factory=list)

    def __iter__(self):
        # allows ``t_star, z = feasibility_margin(p)``
        return iter((self.t_star, self.z))


class _Stop(Exception):
    def __init__(self, status: Status):
        self.status = status


class _Reduced:
    """Problem restated in null-space coordinates ``z = z0 + Z w``."""

    def __init__(self, p: SdpProblem, opts: SdpOptions):
        self.p = p
        n = p.nvars
        E, g = p.E, p.g
        if E.shape[0]:
            U, s, Vt = np.linalg.svd(E)
            tol = max(E.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
            rank = int(np.sum(s > tol))
            self.Z = Vt[rank:].T.copy()
        else:
            self.Z = np.eye(n)
        self.consistent = True
        self.z0 = self._start_point(opts)
        self.nw = self.Z.shape[1]
        self.F0r = []
        self.Fr = []
        for b in p.blocks:
            self.F0r.append(b.at(self.z0))
            self.Fr.append(np.tensordot(self.Z.T, b.F, axes=1) if n else np.zeros((0, b.dim, b.dim)))
        self.m_blocks = sum(b.dim for b in p.blocks)
        self.m_bounds = 2 * n

    def _start_point(self, opts: SdpOptions) -> np.ndarray:
        p = self.p
        lo, hi = p.lower, p.upper
        width = hi - lo
        pad = np.minimum(1.0, width / 4.0)
        hint = np.zeros(p.nvars) if opts.z_start is None else np.asarray(opts.z_start, dtype=float)
        hint = np.clip(hint, lo + pad, hi - pad)
        if p.E.shape[0]:
            resid = p.E @ hint - p.g
            hint = hint - np.linalg.lstsq(p.E, resid, rcond=None)[0]
            if np.linalg.norm(p.E @ hint - p.g) > 1e-9 * (1.0 + np.linalg.norm(p.g)):
                self.consistent = False
                return hint
        margin = np.minimum(hint - lo, hi - hint)
        if p.nvars == 0 or np.all(margin > 1e-9 * np.maximum(1.0, width)):
            return hint
        return self._lp_start()

    def _lp_start(self) -> np.ndarray:
        # maximize s subject to lo + s <= z <= hi - s, E z = g
        p = self.p
        n = p.nvars
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        A_ub = np.block([[-np.eye(n), np.ones((n, 1))], [np.eye(n), np.ones((n, 1))]])
        b_ub = np.concatenate([-p.lower, p.upper])
        A_eq = np.hstack([p.E, np.zeros((p.E.shape[0], 1))]) if p.E.shape[0] else None
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=p.g if A_eq is not None else None,
                      bounds=[(None, None)] * n + [(None, 1.0)], method="highs")
        if res.status != 0 or res.x[-1] <= 0:
            self.consistent = False
            return np.clip(np.zeros(n), p.lower, p.upper)
        return res.x[:n]

    def z_of(self, w: np.ndarray) -> np.ndarray:
        return self.z0 + self.Z @ w


class _Barrier:
    """Log-barrier objective over ``x = (w[, t])``."""

    def __init__(self, red: _Reduced, with_t: bool, cw: np.ndarray):
        self.red = red
        self.with_t = with_t
        self.nx = red.nw + (1 if with_t else 0)
        self.cw = cw
        self.A = []
        for F0r, Fr in zip(red.F0r, red.Fr):
            d = F0r.shape[0]
            if with_t:
                stack = np.concatenate([Fr, -np.eye(d)[None]], axis=0)
            else:
                stack = Fr
            self.A.append(stack)
        Zb = red.Z
        if with_t:
            Zb = np.hstack([Zb, np.zeros((Zb.shape[0], 1))])
        self.Zb = Zb
        self.m = red.m_blocks + red.m_bounds

    def _slacks(self, x):
        red = self.red
        S = []
        for F0r, A in zip(red.F0r, self.A):
            S.append(F0r + np.tensordot(x, A, axes=1) if self.nx else F0r)
        z = red.z0 + self.Zb @ x if self.nx else red.z0
        return S, z - red.p.lower, red.p.upper - z

    def value(self, x, tau):
        S, slo, shi = self._slacks(x)
        if np.any(slo <= 0) or np.any(shi <= 0):
            return np.inf
        total = tau * float(self.cw @ x) - np.sum(np.log(slo)) - np.sum(np.log(shi))
        for Sb in S:
            try:
                L = np.linalg.cholesky(Sb)
            except np.linalg.LinAlgError:
                return np.inf
            total -= 2.0 * np.sum(np.log(np.diag(L)))
        return total

    def derivatives(self, x, tau):
        S, slo, shi = self._slacks(x)
        g = tau * self.cw.copy()
        H = np.zeros((self.nx, self.nx))
        for Sb, A in zip(S, self.A):
            L = np.linalg.cholesky(Sb)
            Linv = np.linalg.inv(L)
            B = Linv @ A @ Linv.T
            g -= np.trace(B, axis1=1, axis2=2)
            Bf = B.reshape(self.nx, -1)
            H += Bf @ Bf.T
        ilo, ihi = 1.0 / slo, 1.0 / shi
        g += self.Zb.T @ (ihi - ilo)
        H += (self.Zb.T * (ilo**2 + ihi**2)) @ self.Zb
        return g, H

    def max_step(self, x, dx) -> float:
        """Largest step along ``dx`` that stays inside every cone."""
        S, slo, shi = self._slacks(x)
        limit = np.inf
        for Sb, A in zip(S, self.A):
            L = np.linalg.cholesky(Sb)
            Linv = np.linalg.inv(L)
            dS = np.tensordot(dx, A, axes=1)
            lam = float(np.linalg.eigvalsh(Linv @ dS @ Linv.T)[0])
            if lam < 0:
                limit = min(limit, -1.0 / lam)
        dz = self.Zb @ dx
        for slack, rate in ((slo, dz), (shi, -dz)):
            neg = rate < 0
            if np.any(neg):
                limit = min(limit, float(np.min(slack[neg] / -rate[neg])))
        return limit


def _newton_center(bar: _Barrier, x, tau, budget: list[int], max_iters: int):
    alpha, beta = 0.01, 0.5
    for _ in range(100):
        if budget[0] >= max_iters:
            raise _Stop(Status.ITERATION_LIMIT)
        budget[0] += 1
        g, H = bar.derivatives(x, tau)
        dx = _solve_newton(H, g)
        dec = -float(g @ dx)
        if dec / 2.0 <= 1e-10:
            return x
        f0 = bar.value(x, tau)
        step = min(1.0, 0.99 * bar.max_step(x, dx))
        while True:
            xn = x + step * dx
            fn = bar.value(xn, tau)
            if np.isfinite(fn) and fn <= f0 - alpha * step * dec:
                break
            # decrease below rounding level of f: any interior step will do
            if np.isfinite(fn) and step * dec <= 1e-13 * (1.0 + abs(f0)):
                break
            step *= beta
            if step < 1e-14:
                return x
        x = xn
    return x


def _solve_newton(H, g):
    diag = np.abs(np.diag(H))
    scale = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 1.0)
    Hs = H * scale[:, None] * scale[None, :]
    rhs = -g * scale
    reg = 0.0
    for _ in range(8):
        try:
            L = np.linalg.cholesky(Hs + reg * np.eye(len(g)))
            y = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
            if np.all(np.isfinite(y)):
                return y * scale
        except np.linalg.LinAlgError:
            pass
        reg = 1e-14 if reg == 0.0 else reg * 100.0
    raise _Stop(Status.NUMERICAL_FAILURE)


def _block_scale(red: _Reduced) -> float:
    vals = [np.max(np.abs(F0)) for F0 in red.F0r] + [np.max(np.abs(Fr)) for Fr in red.Fr if Fr.size]
    s = max(vals, default=0.0)
    return s if s > 0 else 1.0


def _phase_one(red: _Reduced, opts: SdpOptions, interior_only: bool = False) -> MarginResult:
    n = red.p.nvars
    if not red.consistent:
        return MarginResult(-np.inf, red.z0, Verdict.INFEASIBLE, Status.INFEASIBLE, -np.inf)
    if not red.p.blocks:
        return MarginResult(np.inf, red.z0, Verdict.FEASIBLE, Status.FEASIBLE, np.inf)
    lam = min(float(np.linalg.eigvalsh(F0)[0]) for F0 in red.F0r)
    delta = max(abs(lam), _block_scale(red))
    cw = np.zeros(red.nw + 1)
    cw[-1] = -1.0
    bar = _Barrier(red, True, cw)
    x = np.zeros(red.nw + 1)
    x[-1] = lam - delta
    tau = bar.m / delta
    budget = [0]
    history: list[tuple[int, float, float]] = []
    status = Status.FEASIBLE
    try:
        while True:
            x = _newton_center(bar, x, tau, budget, opts.max_iters)
            t = float(x[-1])
            gap = bar.m / tau
            history.append((budget[0], -t, -t - gap))
            if (opts.early_exit or interior_only) and t > 10 * opts.feas_tol:
                break
            if opts.early_exit and t + gap < -opts.feas_tol:
                break
            if gap <= max(opts.margin_abs_tol, opts.margin_rel_tol * abs(t)):
                break
            tau *= 10.0
    except _Stop as stop:
        status = stop.status
    t = float(x[-1])
    upper = t + bar.m / tau
    # x is always strictly feasible for the shifted problem, so t is a valid
    # lower bound on t_star even when the iteration stopped early
    if t > opts.feas_tol:
        verdict = Verdict.FEASIBLE
    elif upper < -opts.feas_tol or (status is Status.FEASIBLE and t < -opts.feas_tol):
        verdict = Verdict.INFEASIBLE
    else:
        verdict = Verdict.MARGINAL
    if status is Status.FEASIBLE and verdict is not Verdict.FEASIBLE:
        status = Status.INFEASIBLE
    z = red.z_of(x[:-1]) if n else red.z0
    return MarginResult(t, z, verdict, status, upper, budget[0], history)


def feasibility_margin(p: SdpProblem, opts: SdpOptions | None = None) -> MarginResult:
    """Largest ``t`` with every block ``>= t I`` under the equalities and box.

    The objective of ``p`` is ignored. The verdict is feasible iff
    ``t_star > opts.feas_tol``, infeasible iff ``t_star < -opts.feas_tol``
    (or the upper bound on ``t_star`` already is), marginal otherwise.
    """
    opts = opts or SdpOptions()
    p.validate()
    return _phase_one(_Reduced(p, opts), opts)


def solve(p: SdpProblem, opts: SdpOptions | None = None) -> SdpSolution:
    """Minimize ``c^T z`` over the LMI, equality and box constraints."""
    opts = opts or SdpOptions()
    p.validate()
    red = _Reduced(p, opts)
    phase1 = _phase_one(red, opts, interior_only=True)
    if phase1.verdict is not Verdict.FEASIBLE:
        status = phase1.status if phase1.status in (Status.NUMERICAL_FAILURE, Status.ITERATION_LIMIT) \
            else Status.INFEASIBLE
        return _finish(p, status, phase1.z, np.inf, phase1, phase1.iterations, [])
    if not np.any(p.c):
        return _finish(p, Status.FEASIBLE, phase1.z, 0.0, phase1, phase1.iterations, [])

    n = p.nvars
    w = np.linalg.lstsq(red.Z, phase1.z - red.z0, rcond=None)[0] if red.nw else np.zeros(0)
    cw = red.Z.T @ p.c
    offset = float(p.c @ red.z0)
    bar = _Barrier(red, False, cw)
    tau = _initial_tau(bar, w, offset)
    budget = [0]
    history: list[tuple[int, float, float]] = []
    status = Status.OPTIMAL
    try:
        while True:
            w = _newton_center(bar, w, tau, budget, opts.max_iters)
            obj = offset + float(cw @ w)
            gap = bar.m / tau
            history.append((budget[0], obj, obj - gap))
            if gap <= opts.gap_tol * (1.0 + abs(obj)):
                break
            tau *= 10.0
    except _Stop as stop:
        status = stop.status
    z = red.z_of(w) if n else red.z0
    sol = _finish(p, status, z, float(p.c @ z), phase1, phase1.iterations + budget[0], history)
    sol.gap = bar.m / tau
    return sol


def _initial_tau(bar: _Barrier, w, offset) -> float:
    g, H = bar.derivatives(w, 0.0)
    try:
        Hinv_c = np.linalg.solve(H, bar.cw)
        denom = float(bar.cw @ Hinv_c)
        tau = -float(g @ Hinv_c) / denom if denom > 0 else 0.0
    except np.linalg.LinAlgError:
        tau = 0.0
    if not np.isfinite(tau) or tau <= 0:
        tau = bar.m / (1.0 + abs(offset + float(bar.cw @ w)))
    return tau


def _finish(p, status, z, objective, phase1, iters, history) -> SdpSolution:
    z = np.asarray(z, dtype=float)
    resid = float(np.max(np.abs(p.E @ z - p.g))) if p.E.shape[0] else 0.0
    mins = p.block_min_eigs(z) if np.all(np.isfinite(z)) else [np.nan] * len(p.blocks)
    gap = 0.0 if status is Status.FEASIBLE else np.inf
    return SdpSolution(status, z, objective, mins, gap, phase1.t_star, iters, resid, history)


# text dump --------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def dump(p: SdpProblem, path: str | Path | None = None) -> str:
    """Serialize to a plain-text format (row-major dense matrices)."""
    out = io.StringIO()
    w = out.write
    w("# hydrocert sdp problem v1\n")
    w(f"nvars {p.nvars}\nzmax {_fmt(p.zmax)}\n")
    w("objective\n" + " ".join(_fmt(v) for v in p.c) + "\n")
    w("lower\n" + " ".join(_fmt(v) for v in p.lower) + "\n")
    w("upper\n" + " ".join(_fmt(v) for v in p.upper) + "\n")
    w(f"equalities {p.E.shape[0]}\n")
    for row, rhs in zip(p.E, p.g):
        w(" ".join(_fmt(v) for v in row) + " | " + _fmt(rhs) + "\n")
    for k, b in enumerate(p.blocks):
        w(f"block {k} dim {b.dim}\n")
        for label, M in [("F0", b.F0)] + [(f"F{i + 1}", b.F[i]) for i in range(p.nvars)]:
            if label != "F0" and not np.any(M):
                continue
            w(label + "\n")
            for row in M:
                w(" ".join(_fmt(v) for v in row) + "\n")
    w("end\n")
    text = out.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def load(source: str | Path) -> SdpProblem:
    """Inverse of :func:`dump`; accepts a path or the text itself."""
    text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else str(source)
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    it = iter(lines)

    def floats(line):
        return np.array([float(v) for v in line.split()])

    try:
        n = int(next(it).split()[1])
        zmax = float(next(it).split()[1])
        assert next(it) == "objective"
        c = floats(next(it)) if n else np.zeros(0)
        assert next(it) == "lower"
        lower = floats(next(it)) if n else np.zeros(0)
        assert next(it) == "upper"
        upper = floats(next(it)) if n else np.zeros(0)
        neq = int(next(it).split()[1])
        E = np.zeros((neq, n))
        g = np.zeros(neq)
        for r in range(neq):
            lhs, rhs = next(it).split("|")
            E[r] = floats(lhs)
            g[r] = float(rhs)
        blocks = []
        line = next(it)
        while line != "end":
            d = int(line.split()[3])
            F0 = np.zeros((d, d))
            F = np.zeros((n, d, d))
            line = next(it)
            while not line.startswith("block") and line != "end":
                idx = int(line[1:])
                M = np.vstack([floats(next(it)) for _ in range(d)])
                if idx == 0:
                    F0 = M
                else:
                    F[idx - 1] = M
                line = next(it)
            blocks.append(LmiBlock(F0, F))
    except (StopIteration, ValueError, AssertionError, IndexError) as exc:
        raise InputError(f"malformed sdp dump: {exc!r}") from None
    return SdpProblem(n, c, blocks, E, g, zmax=zmax, lower=lower, upper=upper)


def scaled(p: SdpProblem, s: float) -> SdpProblem:
    """Copy of ``p`` with every block multiplied by ``s``."""
    return replace(p, blocks=[LmiBlock(s * b.F0, s * b.F) for b in p.blocks])
