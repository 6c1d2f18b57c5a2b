"""Matrix sum-of-squares relaxation of polynomial matrix inequalities.

``M(x; z) >= 0 for all x in Omega`` is replaced by the identity

    M(x; z) = S_0(x) + sum_k g_k(x) S_k(x),

where every ``S_k(x) = (v_k(x) (x) I_n)^T G_k (v_k(x) (x) I_n)`` is built from
a monomial vector ``v_k`` and a PSD Gram matrix ``G_k``. Matching the
coefficients of both sides gives linear equalities in ``(z, G_0, ..., G_K)``
and the Gram matrices become LMI blocks of an :class:`~hydrocert.sdp.SdpProblem`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import InputError
from .linalg import min_eigenvalue
from .poly import AffinePoly2, Monomial, Poly2, SymPolyMatrix, match_coefficients, monomial_basis
from .sdp import LmiBlock, SdpOptions, SdpProblem, Status, Verdict, ZMAX, feasibility_margin

GRAM_TOL = 1e-8
RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class SemialgebraicBox:
    """``Omega = {x : g_k(x) >= 0 for all k}`` plus sampling ranges per slot.

    ``periodic[s]`` holds the period of slot ``s`` (or None). A periodic slot
    carries no constraint unless a matrix actually depends on it.
    """

    constraints: tuple[Poly2, ...] = ()
    bounds: tuple = (None, None)
    periodic: tuple = (None, None)

    def __post_init__(self):
        for g in self.constraints:
            if g.is_zero():
                raise InputError("domain constraints must be non-zero polynomials")

    @classmethod
    def rectangle(cls, bounds, periodic=(None, None)) -> "SemialgebraicBox":
        """Box from per-slot ``(a, b)`` ranges; periodic slots get no constraint."""
        cons = []
        for slot, rng in enumerate(bounds):
            if rng is None or periodic[slot] is not None:
                continue
            a, b = map(float, rng)
            if not a < b:
                raise InputError(f"degenerate interval {rng} for slot {slot}")
            x = Poly2.var(slot)
            cons.append((x - a) * (b - x))
        return cls(tuple(cons), tuple(bounds), tuple(periodic))

    def constraints_for(self, slots: set[int]) -> list[Poly2]:
        """Constraints usable for a matrix depending on ``slots`` only."""
        cons = [g for g in self.constraints if g.variables() <= slots]
        covered = set()
        for g in cons:
            covered |= g.variables()
        for s in sorted(slots - covered):
            if self.periodic[s] is not None and self.bounds[s] is not None:
                a, b = map(float, self.bounds[s])
                x = Poly2.var(s)
                cons.append((x - a) * (b - x))
        return cons

    def contains(self, pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        ok = np.ones(len(pts), dtype=bool)
        for g in self.constraints:
            ok &= g.eval_many(pts) >= -tol
        return ok

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """``n`` scrambled Halton points of the bounding ranges lying in Omega."""
        lo = np.array([-1.0 if r is None else float(r[0]) for r in self.bounds])
        hi = np.array([1.0 if r is None else float(r[1]) for r in self.bounds])
        sampler = qmc.Halton(d=2, scramble=True, seed=seed)
        out = np.zeros((0, 2))
        while len(out) < n:
            pts = qmc.scale(sampler.random(max(n, 16)), lo, hi)
            out = np.vstack([out, pts[self.contains(pts)]])
        return out[:n]


@dataclass
class MatrixSosCertificate:
    """Gram matrices and bases proving ``M(x) >= 0`` on a semialgebraic set."""

    n: int
    multipliers: list[Poly2]
    bases: list[list[Monomial]]
    grams: list[np.ndarray]
    residual: list[list[Poly2]] = field(default_factory=list)

    def sos_term(self, k: int) -> list[list[Poly2]]:
        """``S_k(x)`` as an ``n x n`` grid of polynomials."""
        basis, G, n = self.bases[k], self.grams[k], self.n
        out = [[Poly2() for _ in range(n)] for _ in range(n)]
        for r in range(n):
            for s in range(r, n):
                terms: dict[Monomial, float] = {}
                for ia, a in enumerate(basis):
                    for ib, b in enumerate(basis):
                        v = G[ia * n + r, ib * n + s]
                        if v:
                            mono = (a[0] + b[0], a[1] + b[1])
                            terms[mono] = terms.get(mono, 0.0) + v
                out[r][s] = out[s][r] = Poly2(terms)
        return out

    def reconstruct(self) -> list[list[Poly2]]:
        n = self.n
        total = [[Poly2() for _ in range(n)] for _ in range(n)]
        for k, g in enumerate(self.multipliers):
            S = self.sos_term(k)
            for r in range(n):
                for s in range(n):
                    total[r][s] = total[r][s] + g * S[r][s]
        return total

    def congruence(self, d: Sequence[float]) -> "MatrixSosCertificate":
        """Certificate for ``diag(d) M diag(d)`` given one for ``M``."""
        d = np.asarray(d, dtype=float)
        grams = []
        for basis, G in zip(self.bases, self.grams):
            D = np.tile(d, len(basis))
            grams.append(G * D[:, None] * D[None, :])
        return MatrixSosCertificate(self.n, self.multipliers, self.bases, grams)

    def to_json(self, names: Sequence[str] = ("x", "y")) -> str:
        doc = {
            "n": self.n,
            "names": list(names),
            "terms": [
                {
                    "multiplier": g.to_str(names),
                    "basis": [list(m) for m in basis],
                    "gram": G.tolist(),
                }
                for g, basis, G in zip(self.multipliers, self.bases, self.grams)
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MatrixSosCertificate":
        doc = json.loads(text)
        names = doc.get("names", ["x", "y"])
        mults, bases, grams = [], [], []
        for t in doc["terms"]:
            mults.append(Poly2.parse(t["multiplier"], names))
            bases.append([tuple(m) for m in t["basis"]])
            grams.append(np.array(t["gram"], dtype=float))
        return cls(int(doc["n"]), mults, bases, grams)


@dataclass
class VerifyReport:
    passed: bool
    min_gram_eig: float
    max_residual: float
    residual_tol: float

    def __bool__(self):
        return self.passed


@dataclass
class _Lift:
    """Bookkeeping for one compiled matrix constraint."""

    n: int
    multipliers: list[Poly2]
    bases: list[list[Monomial]]
    offsets: list[int]          # first unknown index of each Gram matrix
    constant: bool = False


def _gram_index(N: int, i: int, j: int) -> int:
    # position of (i, j), i <= j, in the row-major upper triangle of an N x N matrix
    if i > j:
        i, j = j, i
    return i * N - i * (i - 1) // 2 + (j - i)


def default_degree(M: SymPolyMatrix) -> int:
    deg = M.degree()
    return 0 if deg <= 0 else math.ceil(deg / 2) + 1


def compile(Ms: SymPolyMatrix | Sequence[SymPolyMatrix], box: SemialgebraicBox,
            relax_degree: int | Sequence[int | None] | None = None,
            zmax: float = ZMAX) -> tuple[SdpProblem, Callable]:
    """Compile polynomial matrix inequalities into one SDP.

    Parameters
    ----------
    Ms : SymPolyMatrix or list of them
        Constraints ``M(x; z) >= 0`` sharing the unknown vector ``z``.
    box : SemialgebraicBox
        The set on which the inequalities must hold.
    relax_degree : int or list, optional
        Half-degree ``d`` of the multiplier-free SOS term (its basis has
        monomials up to degree ``d``). Defaults to ``ceil(deg M / 2) + 1``.

    Returns
    -------
    problem : SdpProblem
        Unknowns are ``z`` followed by the Gram entries.
    decoder : callable
        Maps an SDP solution vector to ``(z, [certificate per constraint])``.
    """
    if isinstance(Ms, SymPolyMatrix):
        Ms = [Ms]
    Ms = list(Ms)
    if not Ms:
        raise InputError("nothing to compile")
    nz = Ms[0].nvars
    if any(M.nvars != nz for M in Ms):
        raise InputError("all constraints must share one unknown vector")
    degrees = relax_degree if isinstance(relax_degree, (list, tuple)) else [relax_degree] * len(Ms)

    lifts: list[_Lift] = []
    next_var = nz
    for M, d in zip(Ms, degrees):
        if M.is_constant_in_x():
            lifts.append(_Lift(M.n, [Poly2.const(1.0)], [[(0, 0)]], [], constant=True))
            continue
        deg = M.degree()
        need = math.ceil(deg / 2)
        d = default_degree(M) if d is None else int(d)
        if d < need:
            raise InputError(f"relax_degree {d} too low: this matrix has degree {deg}, needs at least {need}")
        slots = M.variables()
        mults = [Poly2.const(1.0)]
        bases = [monomial_basis(d, slots)]
        for g in box.constraints_for(slots):
            dg = d - math.ceil(g.degree / 2)
            if dg >= 0:
                mults.append(g)
                bases.append(monomial_basis(dg, slots))
        if not bases[0]:
            raise InputError("empty monomial basis")
        offsets = []
        for basis in bases:
            N = len(basis) * M.n
            offsets.append(next_var)
            next_var += N * (N + 1) // 2
        lifts.append(_Lift(M.n, mults, bases, offsets))

    nvars = next_var
    blocks: list[LmiBlock] = []
    E_rows: list[np.ndarray] = []
    g_rows: list[float] = []
    for M, lift in zip(Ms, lifts):
        if lift.constant:
            F0, F = M.numeric()
            Ffull = np.zeros((nvars, M.n, M.n))
            Ffull[:nz] = F
            blocks.append(LmiBlock(F0, Ffull))
            continue
        n = M.n
        for basis, off in zip(lift.bases, lift.offsets):
            N = len(basis) * n
            F = np.zeros((nvars, N, N))
            for i in range(N):
                for j in range(i, N):
                    v = off + _gram_index(N, i, j)
                    F[v, i, j] = F[v, j, i] = 1.0
            blocks.append(LmiBlock(np.zeros((N, N)), F))
        for r in range(n):
            for s in range(r, n):
                rhs = AffinePoly2()
                for g, basis, off in zip(lift.multipliers, lift.bases, lift.offsets):
                    N = len(basis) * n
                    coeffs: dict[int, dict[Monomial, float]] = {}
                    for ia, a in enumerate(basis):
                        for ib, b in enumerate(basis):
                            v = off + _gram_index(N, ia * n + r, ib * n + s)
                            mono = (a[0] + b[0], a[1] + b[1])
                            bucket = coeffs.setdefault(v, {})
                            bucket[mono] = bucket.get(mono, 0.0) + 1.0
                    rhs = rhs + AffinePoly2(None, {v: Poly2(t) * g for v, t in coeffs.items()})
                for eq in match_coefficients(M.entry(r, s), rhs):
                    row = np.zeros(nvars)
                    for i, c in eq.coeffs.items():
                        row[i] += c
                    if not np.any(row):
                        if abs(eq.rhs) > 1e-12:
                            # e.g. a monomial no Gram term can produce
                            row = np.zeros(nvars)
                        else:
                            continue
                    E_rows.append(row)
                    g_rows.append(eq.rhs)

    E = np.array(E_rows) if E_rows else np.zeros((0, nvars))
    problem = SdpProblem(nvars, np.zeros(nvars), blocks, E, np.array(g_rows), zmax=zmax)

    def decode(x) -> tuple[np.ndarray, list[MatrixSosCertificate]]:
        x = np.asarray(x, dtype=float)
        z = x[:nz]
        certs = []
        for M, lift in zip(Ms, lifts):
            if lift.constant:
                grams = [M.evaluate(z)]
            else:
                grams = []
                for basis, off in zip(lift.bases, lift.offsets):
                    N = len(basis) * M.n
                    G = np.zeros((N, N))
                    iu = np.triu_indices(N)
                    G[iu] = x[off:off + N * (N + 1) // 2]
                    G = G + np.triu(G, 1).T
                    grams.append(G)
            cert = MatrixSosCertificate(M.n, list(lift.multipliers), [list(b) for b in lift.bases], grams)
            cert.residual = residual(cert, M, z)
            certs.append(cert)
        return z, certs

    return problem, decode


def residual(cert: MatrixSosCertificate, M: SymPolyMatrix, z=()) -> list[list[Poly2]]:
    """``M(x; z) - sum_k g_k S_k(x)`` entry by entry."""
    if cert.n != M.n:
        raise InputError(f"certificate is {cert.n}x{cert.n} but matrix is {M.n}x{M.n}")
    for basis, G in zip(cert.bases, cert.grams):
        if G.shape != (len(basis) * cert.n,) * 2:
            raise InputError("Gram matrix does not match its basis")
    target = M.at(np.asarray(z, dtype=float)) if M.nvars else M.at([])
    recon = cert.reconstruct()
    return [[target[r][s] - recon[r][s] for s in range(M.n)] for r in range(M.n)]


def verify(cert: MatrixSosCertificate, M: SymPolyMatrix, z=()) -> VerifyReport:
    """Recompute residual and Gram spectra from scratch."""
    R = residual(cert, M, z)
    max_res = max(R[r][s].max_abs_coeff() for r in range(M.n) for s in range(M.n))
    min_eig = min(min_eigenvalue(G) for G in cert.grams)
    tol = RESIDUAL_TOL * (1.0 + (M.max_abs_coeff(np.asarray(z, dtype=float)) if M.nvars else M.max_abs_coeff([])))
    return VerifyReport(min_eig >= -GRAM_TOL and max_res <= tol, min_eig, max_res, tol)


def sample_check(M: SymPolyMatrix, box: SemialgebraicBox, n: int = 1000, seed: int = 0, z=()) -> float:
    """Smallest eigenvalue of ``M(x; z)`` over ``n`` quasi-random points of Omega."""
    if n < 1:
        raise InputError("n must be at least 1")
    z = np.asarray(z, dtype=float)
    grid = M.at(z) if M.nvars else M.at([])
    if M.is_constant_in_x():
        A = np.array([[grid[r][s].eval((0.0, 0.0)) for s in range(M.n)] for r in range(M.n)])
        return min_eigenvalue(A)
    pts = box.sample(n, seed)
    A = np.zeros((len(pts), M.n, M.n))
    for r in range(M.n):
        for s in range(r, M.n):
            vals = grid[r][s].eval_many(pts)
            A[:, r, s] = A[:, s, r] = vals
    return float(np.min(np.linalg.eigvalsh(A)[:, 0]))


DEGREE_CAP = 4


@dataclass
class SosResult:
    """Outcome of :func:`prove`."""

    verdict: Verdict
    z: np.ndarray
    certificates: list[MatrixSosCertificate]
    margin: float
    degree: int | None
    status: Status
    reports: list[VerifyReport] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.verdict is Verdict.FEASIBLE


def prove(Ms: SymPolyMatrix | Sequence[SymPolyMatrix], box: SemialgebraicBox,
          relax_degree: int | None = None, max_degree: int = DEGREE_CAP,
          opts: SdpOptions | None = None, lower=None, upper=None,
          extra: Callable[[SdpProblem], None] | None = None,
          accept_tight: bool = True) -> SosResult:
    """Search for SOS certificates, raising the degree until one is found.

    A strictly positive margin is accepted outright. A margin within the
    solver tolerance of zero is accepted only if every decoded certificate
    passes :func:`verify` (disable with ``accept_tight=False``, e.g. when a
    margin creeping up to zero only signals an unattained supremum).
    ``lower``/``upper`` bound the leading unknowns
    ``z``; ``extra`` may append constraints to the compiled problem.
    """
    if isinstance(Ms, SymPolyMatrix):
        Ms = [Ms]
    Ms = list(Ms)
    deg = max(M.degree() for M in Ms)
    start = relax_degree
    if start is None:
        start = max(default_degree(M) for M in Ms)
    stop = max(start, max_degree) if relax_degree is None else start
    if all(M.is_constant_in_x() for M in Ms):
        stop = start
    opts = opts or SdpOptions()
    nz = Ms[0].nvars
    last = None
    for d in range(start, stop + 1):
        problem, decode = compile(Ms, box, None if deg <= 0 else d)
        if lower is not None:
            problem.lower[:nz] = lower
        if upper is not None:
            problem.upper[:nz] = upper
        if extra is not None:
            extra(problem)
        problem.validate()
        res = feasibility_margin(problem, opts)
        z, certs = decode(res.z)
        reports = [verify(c, M, z) for c, M in zip(certs, Ms)]
        verdict = res.verdict
        if accept_tight and verdict is Verdict.MARGINAL and res.t_star > -opts.feas_tol and all(reports):
            verdict = Verdict.FEASIBLE
        last = SosResult(verdict, z, certs, res.t_star, None if deg <= 0 else d, res.status, reports)
        if verdict is Verdict.FEASIBLE:
            return last
    return last
