"""Rank and Chern-number extraction from almost projections.

Chern numbers use link variables on a rectangular grid: for frames V of
the eigenspace above 1/2 at neighbouring grid points, U = det(V1* V2)/|.|,
and the plaquette (i,j) -> (i+1,j) -> (i+1,j+1) -> (i,j+1) contributes
the argument of the product of its four links.  The first index runs
along the first coordinate.  The sum of plaquette arguments over 2 pi is
the Chern number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import GapClosedError
from .projections import AlmostProjection

DEFAULT_MAX_PHASE = 0.9 * np.pi


def spectral_class(P, q_rank=None):
    """Number of eigenvalues above 1/2 minus rank Q (default: half the size)."""
    if not isinstance(P, AlmostProjection):
        P = AlmostProjection.from_matrix(P)
    if P.deviation >= 0.25:
        raise GapClosedError(f"deviation {P.deviation:.3g} >= 1/4")
    if q_rank is None:
        q_rank = P.dim // 2
    return P.rank_above_half - q_rank


@dataclass
class KClassReport:
    rank_P: int
    rank_Q: int
    class_rank: int
    ranks: list
    gap_min: float
    deviation_max: float
    constant: bool
    jumps: list = field(default_factory=list)

    def to_json(self):
        return {
            "rank_P": self.rank_P,
            "rank_Q": self.rank_Q,
            "class_rank": self.class_rank,
            "gap_min": self.gap_min,
            "deviation_max": self.deviation_max,
            "constant": self.constant,
            "jumps": [list(map(int, j)) for j in self.jumps],
        }


def rank_field(field, shape=None, q_rank=None, periodic=True):
    """Ranks of a field of almost projections sampled on a grid.

    ``field`` is a flat list (reshaped with ``shape``) or a nested list of
    AlmostProjection objects.  Jumps are pairs of neighbouring grid indices
    with different class ranks.
    """
    items = list(np.ravel(np.array(field, dtype=object)))
    if shape is None:
        shape = (len(items),)
    dev = max(p.deviation for p in items)
    if dev >= 0.25:
        raise GapClosedError(f"deviation {dev:.3g} >= 1/4 somewhere on the grid")
    ranks = np.array([spectral_class(p, q_rank) for p in items]).reshape(shape)
    jumps = []
    for axis in range(ranks.ndim):
        nb = np.roll(ranks, -1, axis=axis)
        diff = ranks != nb
        if not periodic:
            sl = [slice(None)] * ranks.ndim
            sl[axis] = -1
            diff[tuple(sl)] = False
        for idx in zip(*np.nonzero(diff)):
            j = list(idx)
            j[axis] = (j[axis] + 1) % ranks.shape[axis]
            jumps.append((*idx, *j))
    p0 = items[0]
    qr = p0.dim // 2 if q_rank is None else q_rank
    return KClassReport(
        rank_P=int(p0.rank_above_half),
        rank_Q=int(qr),
        class_rank=int(ranks.flat[0]),
        ranks=ranks.tolist(),
        gap_min=float(min(p.gap for p in items)),
        deviation_max=float(dev),
        constant=not jumps,
        jumps=jumps,
    )


@dataclass
class ChernReport:
    chern_input: int | None
    chern_output: int | None
    agree: bool
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "chern_input": self.chern_input,
            "chern_output": self.chern_output,
            "agree": self.agree,
            **self.details,
        }


def _frame(P):
    P = np.asarray(P)
    w, V = np.linalg.eigh((P + P.conj().T) / 2)
    gap = np.min(np.abs(w - 0.5))
    return V[:, w > 0.5], gap, float(np.max(np.abs(w * w - w)))


def _unit(z, tol=1e-12):
    if abs(z) < tol:
        raise GapClosedError("degenerate link variable; grid too coarse")
    return z / abs(z)


def plaquette_sum(links1, links2, periodic=True):
    """Plaquette phases from link arrays.

    ``links1[i, j]`` joins (i, j) to (i+1, j) and ``links2[i, j]`` joins
    (i, j) to (i, j+1).
    """
    if periodic:
        F = links1 * np.roll(links2, -1, axis=0) / (np.roll(links1, -1, axis=1) * links2)
    else:
        F = links1[:-1, :-1] * links2[1:, :-1] / (links1[:-1, 1:] * links2[:-1, :-1])
    return np.angle(F)


def chern_number(field, periodic=True, max_phase=DEFAULT_MAX_PHASE, return_details=False):
    """Chern number of a projection field sampled on an n1 x n2 grid.

    ``field[i][j]`` is a selfadjoint matrix (or AlmostProjection) at grid
    point (i, j).  With ``periodic=False`` the grid is treated as a closed
    square and only its interior plaquettes are summed, which gives an
    integer when the field is constant along the boundary.
    """
    n1, n2 = len(field), len(field[0])
    frames = [[None] * n2 for _ in range(n1)]
    gap, dev = np.inf, 0.0
    for i in range(n1):
        for j in range(n2):
            P = field[i][j]
            P = P.P if isinstance(P, AlmostProjection) else P
            V, g, d = _frame(P)
            frames[i][j] = V
            gap, dev = min(gap, g), max(dev, d)
    if dev >= 0.25:
        raise GapClosedError(f"deviation {dev:.3g} >= 1/4")
    ranks = {frames[i][j].shape[1] for i in range(n1) for j in range(n2)}
    if len(ranks) != 1:
        raise GapClosedError(f"rank not constant over the grid: {sorted(ranks)}")
    m1 = n1 if periodic else n1 - 1
    m2 = n2 if periodic else n2 - 1
    L1 = np.ones((n1, n2), dtype=complex)
    L2 = np.ones((n1, n2), dtype=complex)
    for i in range(n1):
        for j in range(n2):
            if i < m1:
                W = frames[(i + 1) % n1][j]
                L1[i, j] = _unit(np.linalg.det(frames[i][j].conj().T @ W))
            if j < m2:
                W = frames[i][(j + 1) % n2]
                L2[i, j] = _unit(np.linalg.det(frames[i][j].conj().T @ W))
    F = plaquette_sum(L1, L2, periodic)
    peak = float(np.max(np.abs(F))) if F.size else 0.0
    if peak > max_phase:
        raise GapClosedError(f"plaquette phase {peak:.3f} exceeds {max_phase:.3f}")
    total = F.sum() / (2 * np.pi)
    c = int(np.rint(total))
    if abs(total - c) > 1e-6:
        raise GapClosedError(f"non-integral Chern sum {total}")
    if return_details:
        return c, {"gap_min": float(gap), "deviation_max": dev, "max_phase": peak}
    return c


# ---------------------------------------------------------------- reduced frames

@dataclass
class ReducedFrame:
    """Eigenframe of P'' stored on the coordinates C where P'' differs from Q.

    On the remaining coordinates P'' equals Q = diag(1, 0), so the frame is
    completed by the standard basis vectors of the first-half coordinates
    (index < m) outside C.
    """

    C: np.ndarray
    V: np.ndarray
    m: int
    gap: float
    deviation: float

    @classmethod
    def from_block(cls, C, block, m):
        if len(C) == 0:
            return cls(C, np.zeros((0, 0), dtype=complex), m, 0.5, 0.0)
        # divide and conquer driver: much faster than numpy's eigh at this size
        w, V = scipy.linalg.eigh(block, driver="evd", check_finite=False)
        sel = w > 0.5
        return cls(C, V[:, sel], m, float(np.min(np.abs(w - 0.5))),
                   float(np.max(np.abs(w * w - w))))

    @property
    def class_rank(self):
        """rank(P'') - rank(Q)."""
        return self.V.shape[1] - int(np.sum(self.C < self.m))


def _embed(F, U):
    pos = np.searchsorted(U, F.C)
    extra = np.setdiff1d(U, F.C)
    extra = extra[extra < F.m]
    r = F.V.shape[1]
    W = np.zeros((len(U), r + len(extra)), dtype=complex)
    W[pos, :r] = F.V
    W[np.searchsorted(U, extra), r + np.arange(len(extra))] = 1
    return W


def _column_parity(F, U):
    # sign of the permutation moving the common standard columns (first-half
    # coordinates outside U) from their natural place in the full frame to
    # the end; only its parity matters
    r = F.V.shape[1]
    Cs = F.C[F.C < F.m]
    Um = U[U < F.m]

    def moves(cs):
        cs = np.asarray(cs)
        k = np.searchsorted(Cs, cs)
        return int(np.sum((r + cs - k) % 2))

    return moves(np.arange(F.m)) - moves(Um)


def reduced_link(F1, F2, weights=None):
    """Unit link det(V1* D V2)/|.| between two reduced frames.

    ``weights`` is an optional positive diagonal D over all 2m coordinates.
    Standard columns shared by both frames contribute positive factors
    and are dropped.
    """
    U = np.union1d(F1.C, F2.C)
    W1, W2 = _embed(F1, U), _embed(F2, U)
    if W1.shape[1] != W2.shape[1]:
        raise GapClosedError("frame ranks differ across a link")
    if weights is not None:
        W2 = W2 * np.asarray(weights)[U][:, None]
    if W1.shape[1] == 0:
        return 1.0 + 0j
    d = np.linalg.det(W1.conj().T @ W2)
    if (_column_parity(F1, U) + _column_parity(F2, U)) % 2:
        d = -d
    return _unit(d)
