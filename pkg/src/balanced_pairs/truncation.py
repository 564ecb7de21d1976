"""Compressions of regular-representation operators to Cayley balls.

The Hilbert space l^2(Gamma) (x) V is modelled by the nested subspaces
spanned by delta_y (x) v with y in Ball(R).  Basis index of (y, v) is
``position(y) * n_V + v``; since balls are prefixes of each other the
smaller basis is a prefix of the larger one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ResourceCapError
from .groups import ball as make_ball
from .maps import FiniteMap, defect_report

# process-wide cap, overridable from the command line
LIMITS = {"max_dim": 200_000}


@dataclass(frozen=True)
class RegularOperatorSpec:
    """lambda(element) M_symbol acting on l^2(Gamma) (x) C^fiber_dim.

    With ``symbol=None`` the multiplication part is the identity and with
    ``element=None`` the translation part is the identity.
    """

    spec: object
    fiber_dim: int = 1
    element: tuple | None = None
    symbol: Callable | None = None


def _block(ballR, g, symbol, nv, spec):
    """Sparse matrix of P_R lambda(g) M_symbol P_R."""
    rows, cols, vals = [], [], []
    eye = np.eye(nv)
    for k, y in enumerate(ballR.elements):
        z = spec.multiply(g, y)
        j = ballR.index.get(z)
        if j is None:
            continue
        B = eye if symbol is None else np.asarray(symbol(y))
        r, c = np.nonzero(B)
        rows.append(j * nv + r)
        cols.append(k * nv + c)
        vals.append(B[r, c])
    n = len(ballR) * nv
    if not rows:
        return sp.csr_matrix((n, n), dtype=complex)
    M = sp.csr_matrix(
        (np.concatenate(vals).astype(complex), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return M


def _check_dim(ballR, nv, max_dim=None):
    if max_dim is None:
        max_dim = LIMITS["max_dim"]
    if len(ballR) * nv > max_dim:
        raise ResourceCapError(f"dimension {len(ballR) * nv} exceeds cap {max_dim}")


def compress(op, radius, max_dim=None):
    """Matrix of P_R A P_R in the Ball(R) (x) V basis, as sparse CSR."""
    B = make_ball(op.spec, radius)
    _check_dim(B, op.fiber_dim, max_dim)
    g = op.spec.identity() if op.element is None else tuple(op.element)
    return _block(B, g, op.symbol, op.fiber_dim, op.spec)


def truncated_map(spec, radius, symbol, domain, fiber_dim=1, max_dim=None):
    """FiniteMap g -> P_R lambda(g) M_B P_R, symmetrized.

    For positive g the compression is used as is; for the others the value
    is the adjoint of the value at g^-1, which makes the table exactly
    *-symmetric.
    """
    B = make_ball(spec, radius)
    _check_dim(B, fiber_dim, max_dim)
    table = {}
    for g in domain:
        g = tuple(g)
        if g in table:
            continue
        gi = spec.inverse(g)
        pos, neg = (g, gi) if spec.is_positive(g) else (gi, g)
        M = _block(B, pos, symbol, fiber_dim, spec)
        table[pos] = M
        table[neg] = M.conj().T.tocsr() if neg != pos else M
    return FiniteMap(spec, table, check=False)


@dataclass
class TruncationFamily:
    spec: object
    radii: list
    pairs: dict
    fiber_dim: int
    domain: tuple
    build_time: dict = field(default_factory=dict)

    def dim(self, R):
        return self.pairs[R][0].dim


def truncate_pair(spec, plus_symbol, minus_symbol, radii, domain, fiber_dim=1,
                  max_dim=None):
    """Truncated pairs (pi+_R, pi-_R) for each radius.

    ``domain`` is the finite symmetric set on which the maps are tabulated;
    it must contain F.F for the defect computations.
    """
    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    pairs, times = {}, {}
    for R in radii:
        t0 = time.perf_counter()
        plus = truncated_map(spec, R, plus_symbol, domain, fiber_dim, max_dim)
        if minus_symbol is plus_symbol:
            minus = plus
        else:
            minus = truncated_map(spec, R, minus_symbol, domain, fiber_dim, max_dim)
        pairs[R] = (plus, minus)
        times[R] = time.perf_counter() - t0
    return TruncationFamily(spec, radii, pairs, fiber_dim, tuple(tuple(g) for g in domain), times)


def _pad(M, n):
    M = M.tocoo()
    return sp.csr_matrix((M.data, (M.row, M.col)), shape=(n, n))


def interpolate(family, t):
    """Convex path between consecutive truncations.

    ``t`` ranges over [0, len(radii) - 1]; with n = floor(t) and s = t - n
    the value is (1 - s) pi_{R_n} + s pi_{R_{n+1}}, the smaller matrices
    zero-padded into the larger basis.
    """
    last = len(family.radii) - 1
    if not (0 <= t <= last) or last < 1:
        raise ValueError(f"t={t} outside [0, {last}]")
    n = min(int(np.floor(t)), last - 1)
    s = t - n
    lo, hi = family.pairs[family.radii[n]], family.pairs[family.radii[n + 1]]
    N = hi[0].dim
    out = []
    for a, b in zip(lo, hi):
        table = {g: (1 - s) * _pad(a(g), N) + s * b(g) for g in a.domain}
        out.append(FiniteMap(family.spec, table, check=False))
    return tuple(out)


def family_rows(family, F, F_radius=None):
    """Per-radius defect summary rows: R, dim, eps1, eps2, eps2prime, wall_time."""
    rows = []
    for R in family.radii:
        t0 = time.perf_counter()
        rep = defect_report(family.pairs[R], F, F_radius)
        wall = time.perf_counter() - t0 + family.build_time.get(R, 0.0)
        rows.append({
            "R": R,
            "dim": family.dim(R),
            "eps1": rep.eps1,
            "eps2": rep.eps2,
            "eps2prime": rep.eps2prime,
            "wall_time": wall,
        })
    return rows
