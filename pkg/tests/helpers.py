"""Random instances shared by the SOS tests."""

import numpy as np

from hydrocert import sos
from hydrocert.poly import AffinePoly2, Poly2, SymPolyMatrix, monomial_basis
from hydrocert.sdp import SdpProblem

BOX = sos.SemialgebraicBox.rectangle([(-1.0, 1.0), (0.0, 2.0)])


def random_poly(rng, degree, slots, scale=1.0):
    terms = {m: scale * float(rng.standard_normal()) for m in monomial_basis(degree, slots)}
    return Poly2(terms)


def random_affine_matrix(rng):
    """Random ``M(x; z)`` of size 2 or 3, degree <= 2 in x, two unknowns.

    Half the instances carry a ``z_0 I`` term so that a certificate usually
    exists; the rest are generic and mostly infeasible.
    """
    n = int(rng.integers(2, 4))
    slots = {0} if rng.random() < 0.5 else {0, 1}
    degree = int(rng.integers(1, 3))
    shifted = rng.random() < 0.5
    entries = {}
    for r in range(n):
        for s in range(r, n):
            const = random_poly(rng, degree, slots)
            terms = {1: Poly2.const(float(rng.standard_normal()))}
            if shifted and r == s:
                terms[0] = Poly2.const(1.0)
            entries[(r, s)] = AffinePoly2(const, terms)
    return SymPolyMatrix(n, 2, entries)


def random_constant_matrix(rng):
    n = int(rng.integers(1, 5))
    nz = int(rng.integers(0, 3))
    entries = {}
    for r in range(n):
        for s in range(r, n):
            terms = {i: Poly2.const(float(rng.standard_normal())) for i in range(nz)}
            entries[(r, s)] = AffinePoly2(Poly2.const(float(rng.standard_normal()) + (2.0 if r == s else 0.0)), terms)
    return SymPolyMatrix(n, nz, entries)


def random_feasible(rng, with_equality=True):
    """LMI problem with a known strictly feasible point ``z0``."""
    n = int(rng.integers(1, 6))
    z0 = rng.uniform(-3, 3, n)
    p = SdpProblem.empty(n)
    for _ in range(int(rng.integers(1, 4))):
        d = int(rng.integers(1, 6))
        F = rng.standard_normal((n, d, d))
        F = (F + np.swapaxes(F, 1, 2)) / 2
        B = rng.standard_normal((d, d))
        S = B @ B.T / d + 0.05 * np.eye(d)
        p.add_block(S - np.tensordot(z0, F, axes=1), F)
    if with_equality and n > 1 and rng.random() < 0.5:
        E = rng.standard_normal((1, n))
        p.add_equalities(E, E @ z0)
    return p, z0
