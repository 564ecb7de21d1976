"""Finite tables g -> matrix, their defects and the epsilon quantities.

For a pair (pi+, pi-) of maps and a finite symmetric set F the three
quantities are

* eps1: max ||M_{pi s}(g,h) (pi+(c) - pi-(c))|| over g,h,c in F and s = +/-
* eps2: max ||M_{pi+}(g,h) - M_{pi-}(g,h)|| over g,h in F
* eps2prime: max ||pi+(k) M_{pi+}(g,h) - pi-(k) M_{pi-}(g,h)|| over g,h,k in F

where M_pi(g,h) = pi(gh) - pi(g) pi(h) is the defect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import scipy.sparse as sp

from .errors import DomainError
from .linalg import opnorm

SYMMETRY_TOL = 1e-9


class FiniteMap:
    """A map from a finite symmetric subset of a group to n x n matrices.

    Values may be dense arrays or scipy sparse matrices.  The table must
    satisfy table[g^-1] = table[g]^* up to ``tol``; violations raise.
    """

    def __init__(self, spec, table, *, tol=SYMMETRY_TOL, check=True):
        self.spec = spec
        self.table = {tuple(g): v for g, v in table.items()}
        e = spec.identity()
        if e not in self.table:
            raise ValueError("table must contain the identity")
        self.dim = self.table[e].shape[0]
        if check:
            self._check(tol)

    def _check(self, tol):
        for g, v in self.table.items():
            if v.shape != (self.dim, self.dim):
                raise ValueError(f"value at {g} has shape {v.shape}")
            gi = self.spec.inverse(g)
            if gi not in self.table:
                raise ValueError(f"domain not closed under inverse: {g}")
            if self.spec.sort_key(g) < self.spec.sort_key(gi):
                continue
            err = opnorm(self.table[gi] - v.conj().T)
            if err > tol:
                raise ValueError(f"*-symmetry violated at {g}: {err:.3e}")

    @property
    def domain(self):
        return tuple(self.table)

    def __contains__(self, g):
        return tuple(g) in self.table

    def __call__(self, g):
        try:
            return self.table[tuple(g)]
        except KeyError:
            raise DomainError(f"{g} outside map domain") from None

    @property
    def sparse(self):
        return sp.issparse(self.table[self.spec.identity()])


def defect(pi, g, h):
    """M_pi(g, h) = pi(gh) - pi(g) pi(h)."""
    gh = pi.spec.multiply(g, h)
    return pi(gh) - pi(g) @ pi(h)


@dataclass
class DefectReport:
    F: list
    eps1: float
    eps2: float
    eps2prime: float
    witnesses: dict = field(default_factory=dict)
    F_radius: int | None = None

    def to_json(self):
        return {
            "F_radius": self.F_radius,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "eps2prime": self.eps2prime,
            "witnesses": {k: [list(x) for x in v] for k, v in self.witnesses.items()},
        }


def _defects(pi, F):
    return {(g, h): defect(pi, g, h) for g in F for h in F}


def admissibility_eps(pair, F):
    """Return (eps1, witness) with witness = (sign, g, h, c)."""
    plus, minus = pair
    F = [tuple(g) for g in F]
    diffs = {c: plus(c) - minus(c) for c in F}
    best, wit = 0.0, None
    for sign, pi in (("+", plus), ("-", minus)):
        for (g, h), M in _defects(pi, F).items():
            for c in F:
                val = opnorm(M @ diffs[c])
                if wit is None or val > best:
                    best, wit = val, (sign, g, h, c)
    return best, wit


def balancedness_eps(pair, F):
    """Return (eps2, witness2, eps2prime, witness2prime)."""
    plus, minus = pair
    F = [tuple(g) for g in F]
    Mp = _defects(plus, F)
    Mm = _defects(minus, F)
    e2, w2 = 0.0, None
    e2p, w2p = 0.0, None
    for key in Mp:
        val = opnorm(Mp[key] - Mm[key])
        if w2 is None or val > e2:
            e2, w2 = val, key
        for k in F:
            val = opnorm(plus(k) @ Mp[key] - minus(k) @ Mm[key])
            if w2p is None or val > e2p:
                e2p, w2p = val, key + (k,)
    return e2, w2, e2p, w2p


def defect_report(pair, F, F_radius=None):
    F = [tuple(g) for g in F]
    e1, w1 = admissibility_eps(pair, F)
    e2, w2, e2p, w2p = balancedness_eps(pair, F)
    wit = {"eps1": w1[1:], "eps2": w2, "eps2prime": w2p}
    return DefectReport(F, e1, e2, e2p, wit, F_radius)


def check_K1(a, b):
    """Norms of (a^2 - a)(a - b) and (b^2 - b)(a - b)."""
    d = a - b
    return opnorm((a @ a - a) @ d), opnorm((b @ b - b) @ d)


def check_K2(a, b):
    """Norms of f(a) - f(b) for f(t) = t(1-t) and f(t) = t^2(1-t)."""
    a2, b2 = a @ a, b @ b
    f1 = (a - a2) - (b - b2)
    f2 = (a2 - a2 @ a) - (b2 - b2 @ b)
    return opnorm(f1), opnorm(f2)
