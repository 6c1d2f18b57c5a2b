"""Bivariate polynomials and polynomial matrices affine in decision variables.

The two variables are positional: slot 0 and slot 1. A flow maps its two
in-plane coordinates onto these slots (lower coordinate index first), and
text rendering takes the display names as an argument.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InputError

PRUNE_TOL = 0.0
DEFAULT_NAMES = ("x", "y")

Monomial = tuple[int, int]


def _grlex_key(mono: Monomial) -> tuple[int, int, int]:
    # graded, then higher power of slot 0 first: 1, x, y, x^2, xy, y^2, ...
    return (mono[0] + mono[1], -mono[0], -mono[1])


class Poly2:
    """Sparse real polynomial in two variables.

    Exactly-zero coefficients are dropped, so the zero polynomial has no
    terms and ``degree == -inf``. Tiny coefficients are kept: certificate
    matrices are rescaled by factors far from one.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, float] | None = None):
        clean: dict[Monomial, float] = {}
        for mono, coef in (terms or {}).items():
            a, b = int(mono[0]), int(mono[1])
            if a < 0 or b < 0:
                raise InputError(f"negative exponent in monomial {mono}")
            c = float(coef)
            if not math.isfinite(c):
                raise InputError("polynomial coefficients must be finite")
            if abs(c) > PRUNE_TOL:
                clean[(a, b)] = clean.get((a, b), 0.0) + c
        self._terms = {m: c for m, c in clean.items() if abs(c) > PRUNE_TOL}

    @classmethod
    def const(cls, c: float) -> "Poly2":
        return cls({(0, 0): c})

    @classmethod
    def var(cls, slot: int) -> "Poly2":
        if slot not in (0, 1):
            raise InputError(f"variable slot must be 0 or 1, got {slot}")
        return cls({(1, 0) if slot == 0 else (0, 1): 1.0})

    @property
    def terms(self) -> Mapping[Monomial, float]:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> float:
        if not self._terms:
            return -math.inf
        return max(a + b for a, b in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == (0, 0) for m in self._terms)

    def variables(self) -> set[int]:
        used = set()
        for a, b in self._terms:
            if a:
                used.add(0)
            if b:
                used.add(1)
        return used

    def coeff(self, mono: Monomial) -> float:
        return self._terms.get(tuple(mono), 0.0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # arithmetic -----------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "Poly2":
        if isinstance(other, Poly2):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Poly2.const(float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0.0) + c
        return Poly2(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly2({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self.scale(float(other))
        if not isinstance(other, Poly2):
            return NotImplemented
        out: dict[Monomial, float] = {}
        for (a1, b1), c1 in self._terms.items():
            for (a2, b2), c2 in other._terms.items():
                key = (a1 + a2, b1 + b2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return Poly2(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise InputError("polynomial powers must be non-negative integers")
        result = Poly2.const(1.0)
        for _ in range(k):
            result = result * self
        return result

    def scale(self, c: float) -> "Poly2":
        return Poly2({m: c * v for m, v in self._terms.items()})

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def allclose(self, other: "Poly2", atol: float = 1e-12) -> bool:
        diff = self - other
        return diff.max_abs_coeff() <= atol

    # calculus and evaluation --------------------------------------------
    def partial(self, slot: int) -> "Poly2":
        """Formal partial derivative with respect to variable ``slot``."""
        if slot not in (0, 1):
            raise InputError(f"variable slot must be 0 or 1, got {slot}")
        out = {}
        for (a, b), c in self._terms.items():
            if slot == 0 and a:
                out[(a - 1, b)] = c * a
            elif slot == 1 and b:
                out[(a, b - 1)] = c * b
        return Poly2(out)

    def __call__(self, x0: float, x1: float = 0.0) -> float:
        return self.eval((x0, x1))

    def eval(self, x: Sequence[float]) -> float:
        """Evaluate at the point ``x`` by nested Horner schemes."""
        x0, x1 = float(x[0]), float(x[1])
        if not self._terms:
            return 0.0
        by_a: dict[int, dict[int, float]] = {}
        for (a, b), c in self._terms.items():
            by_a.setdefault(a, {})[b] = c
        top = max(by_a)
        acc = 0.0
        for a in range(top, -1, -1):
            inner = by_a.get(a)
            row = 0.0
            if inner:
                for b in range(max(inner), -1, -1):
                    row = row * x1 + inner.get(b, 0.0)
            acc = acc * x0 + row
        return acc

    def eval_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(len(pts))
        for (a, b), c in self._terms.items():
            out += c * pts[:, 0] ** a * pts[:, 1] ** b
        return out

    # text -------------------------------------------------------------------
    def to_str(self, names: Sequence[str] = DEFAULT_NAMES) -> str:
        if not self._terms:
            return "0"
        parts = []
        for mono in sorted(self._terms, key=_grlex_key):
            c = self._terms[mono]
            factors = []
            for slot, e in enumerate(mono):
                if e == 1:
                    factors.append(names[slot])
                elif e > 1:
                    factors.append(f"{names[slot]}^{e}")
            mag = _num(abs(c))
            if factors:
                body = "*".join(factors) if mag == "1" else f"{mag}*" + "*".join(factors)
            else:
                body = mag
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Poly2({self.to_str()!r})"

    @classmethod
    def parse(cls, text: str, names: Sequence[str] = DEFAULT_NAMES) -> "Poly2":
        """Parse expressions such as ``"1 - x2^2"`` or ``"0.5*(x2 + 1)*x3"``."""
        try:
            tree = ast.parse(text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise InputError(f"cannot parse polynomial {text!r}: {exc.msg}") from None
        env = {name: cls.var(slot) for slot, name in enumerate(names)}
        return cls._coerce(_eval_node(tree.body, env, text))


def _num(v: float) -> str:
    # shortest text that parses back to the same float
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _eval_node(node, env, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise InputError(f"unknown variable {node.id!r} in {text!r}")
        return env[node.id]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval_node(node.operand, env, text)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.BinOp):
        left = _eval_node(node.left, env, text)
        right = _eval_node(node.right, env, text)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div) and not isinstance(right, Poly2):
            return left * (1.0 / right)
        if isinstance(node.op, ast.Pow) and isinstance(right, int) and right >= 0:
            return left**right
    raise InputError(f"unsupported syntax in polynomial {text!r}")


def monomial_basis(degree: int, slots: Iterable[int] = (0, 1)) -> list[Monomial]:
    """Monomials of total degree <= ``degree`` in the given slots, graded-lex.

    With both slots the basis has ``(d+1)(d+2)/2`` elements.
    """
    if degree < 0:
        return []
    slots = set(slots)
    basis = []
    for total in range(degree + 1):
        for a in range(total, -1, -1):
            b = total - a
            if (a and 0 not in slots) or (b and 1 not in slots):
                continue
            basis.append((a, b))
    return basis


# affine-in-unknowns polynomials ---------------------------------------------

class AffinePoly2:
    """Polynomial whose coefficients are affine in an unknown vector ``z``.

    Stored as a constant part plus one polynomial per unknown index:
    ``p(x; z) = const(x) + sum_i z_i * coeffs[i](x)``.
    """

    __slots__ = ("const", "coeffs")

    def __init__(self, const: Poly2 | None = None, coeffs: Mapping[int, Poly2] | None = None):
        self.const = const if const is not None else Poly2()
        self.coeffs = {int(i): p for i, p in (coeffs or {}).items() if not p.is_zero()}

    @classmethod
    def lift(cls, p: Poly2 | float) -> "AffinePoly2":
        return cls(Poly2._coerce(p))

    @classmethod
    def unknown(cls, index: int, p: Poly2 | float = 1.0) -> "AffinePoly2":
        return cls(None, {index: Poly2._coerce(p)})

    def __add__(self, other):
        if not isinstance(other, AffinePoly2):
            other = AffinePoly2.lift(other)
        coeffs = dict(self.coeffs)
        for i, p in other.coeffs.items():
            coeffs[i] = coeffs[i] + p if i in coeffs else p
        return AffinePoly2(self.const + other.const, coeffs)

    __radd__ = __add__

    def __neg__(self):
        return AffinePoly2(-self.const, {i: -p for i, p in self.coeffs.items()})

    def __sub__(self, other):
        if not isinstance(other, AffinePoly2):
            other = AffinePoly2.lift(other)
        return self + (-other)

    def __mul__(self, other):
        # only multiplication by something independent of the unknowns is affine
        if isinstance(other, AffinePoly2):
            raise InputError("product of two affine polynomials is not affine")
        other = Poly2._coerce(other)
        return AffinePoly2(self.const * other, {i: p * other for i, p in self.coeffs.items()})

    __rmul__ = __mul__

    def at(self, z: Sequence[float]) -> Poly2:
        out = self.const
        for i, p in self.coeffs.items():
            if z[i] != 0.0:
                out = out + p * float(z[i])
        return out

    def monomials(self) -> set[Monomial]:
        monos = set(self.const.terms)
        for p in self.coeffs.values():
            monos.update(p.terms)
        return monos

    def degree(self) -> float:
        return max([self.const.degree] + [p.degree for p in self.coeffs.values()])

    def variables(self) -> set[int]:
        used = set(self.const.variables())
        for p in self.coeffs.values():
            used |= p.variables()
        return used


class LinearEquation(NamedTuple):
    monomial: Monomial
    coeffs: dict[int, float]
    rhs: float


def match_coefficients(lhs: AffinePoly2, rhs: AffinePoly2) -> list[LinearEquation]:
    """Equate coefficients of ``lhs`` and ``rhs`` monomial by monomial.

    Each equation reads ``sum_i coeffs[i] * z_i = rhs`` and there is one per
    monomial appearing on either side, in graded-lex order.
    """
    eqs = []
    for mono in sorted(lhs.monomials() | rhs.monomials(), key=_grlex_key):
        row: dict[int, float] = {}
        for i, p in lhs.coeffs.items():
            c = p.coeff(mono)
            if c:
                row[i] = row.get(i, 0.0) + c
        for i, p in rhs.coeffs.items():
            c = p.coeff(mono)
            if c:
                row[i] = row.get(i, 0.0) - c
        row = {i: c for i, c in row.items() if c != 0.0}
        eqs.append(LinearEquation(mono, row, rhs.const.coeff(mono) - lhs.const.coeff(mono)))
    return eqs


@dataclass(frozen=True)
class SymPolyMatrix:
    """Symmetric ``n x n`` matrix of affine polynomials in ``nvars`` unknowns.

    Only entries with ``r <= c`` are stored; missing entries are zero.
    """

    n: int
    nvars: int
    entries: Mapping[tuple[int, int], AffinePoly2]

    def __post_init__(self):
        if self.n < 1:
            raise InputError("matrix dimension must be positive")
        fixed = {}
        for (r, c), p in self.entries.items():
            r, c = (r, c) if r <= c else (c, r)
            if not (0 <= r < self.n and 0 <= c < self.n):
                raise InputError(f"entry ({r}, {c}) outside a {self.n}x{self.n} matrix")
            if any(i >= self.nvars or i < 0 for i in p.coeffs):
                raise InputError("entry refers to an unknown beyond nvars")
            fixed[(r, c)] = fixed[(r, c)] + p if (r, c) in fixed else p
        object.__setattr__(self, "entries", MappingProxyType(fixed))

    @classmethod
    def from_constant(cls, A, nvars: int = 0) -> "SymPolyMatrix":
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        entries = {(r, c): AffinePoly2.lift(A[r, c]) for r in range(n) for c in range(r, n) if A[r, c]}
        return cls(n, nvars, entries)

    @classmethod
    def from_poly_grid(cls, rows: Sequence[Sequence[Poly2 | float]], nvars: int = 0) -> "SymPolyMatrix":
        n = len(rows)
        entries = {(r, c): AffinePoly2.lift(rows[r][c]) for r in range(n) for c in range(r, n)}
        return cls(n, nvars, entries)

    def entry(self, r: int, c: int) -> AffinePoly2:
        key = (r, c) if r <= c else (c, r)
        return self.entries.get(key, AffinePoly2())

    def degree(self) -> float:
        return max((p.degree() for p in self.entries.values()), default=-math.inf)

    def variables(self) -> set[int]:
        used: set[int] = set()
        for p in self.entries.values():
            used |= p.variables()
        return used

    def is_constant_in_x(self) -> bool:
        return not self.variables()

    def at(self, z: Sequence[float]) -> list[list[Poly2]]:
        z = np.asarray(z, dtype=float)
        return [[self.entry(r, c).at(z) for c in range(self.n)] for r in range(self.n)]

    def numeric(self, x: Sequence[float] = (0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate at the point ``x``: returns ``F0`` and stacked ``F_i``."""
        F0 = np.zeros((self.n, self.n))
        F = np.zeros((self.nvars, self.n, self.n))
        for (r, c), p in self.entries.items():
            v = p.const.eval(x)
            F0[r, c] = F0[c, r] = v
            for i, q in p.coeffs.items():
                v = q.eval(x)
                F[i, r, c] = F[i, c, r] = v
        return F0, F

    def evaluate(self, z: Sequence[float], x: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
        F0, F = self.numeric(x)
        return F0 + np.tensordot(np.asarray(z, dtype=float), F, axes=1) if self.nvars else F0

    def congruence(self, d: Sequence[float]) -> "SymPolyMatrix":
        """Return ``diag(d) @ self @ diag(d)``."""
        d = [float(v) for v in d]
        return SymPolyMatrix(
            self.n, self.nvars, {(r, c): p * (d[r] * d[c]) for (r, c), p in self.entries.items()}
        )

    def rescale_unknowns(self, s: Sequence[float]) -> "SymPolyMatrix":
        """Substitute ``z = diag(s) @ zhat``; the result is affine in ``zhat``."""
        s = [float(v) for v in s]
        out = {}
        for key, p in self.entries.items():
            out[key] = AffinePoly2(p.const, {i: q * s[i] for i, q in p.coeffs.items()})
        return SymPolyMatrix(self.n, self.nvars, out)

    def with_nvars(self, nvars: int) -> "SymPolyMatrix":
        return SymPolyMatrix(self.n, nvars, self.entries)

    def max_abs_coeff(self, z: Sequence[float]) -> float:
        return max((p.at(z).max_abs_coeff() for p in self.entries.values()), default=0.0)
