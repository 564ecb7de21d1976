"""Covers, the idempotent p(x), pushed maps A_pi(x) and the P, P', P'' formulas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .linalg import dense, hermitian_function, opnorm

CLAMP_TOL = 1e-8
# eigenvalues this close to 0 or 1 are rounding noise; sqrt would blow them up
SNAP_TOL = 1e-12


# ---------------------------------------------------------------- covers

def arc_weights(x, n_arcs, overlap):
    """Partition of unity on the circle R/Z with sum of squares equal to 1.

    Arc k is centred at k/n; the overlap of arcs k and k+1 is the interval
    of width ``overlap`` centred at (k + 1/2)/n, where the weights are
    cos and sin of an angle ramping linearly from 0 to pi/2.
    """
    phi = np.zeros(n_arcs)
    if n_arcs == 1:
        phi[0] = 1.0
        return phi
    x = float(x) % 1.0
    for k in range(n_arcs):
        c = (k + 0.5) / n_arcs
        d = (x - c + 0.5) % 1.0 - 0.5
        if abs(d) < overlap / 2:
            ang = (d / overlap + 0.5) * np.pi / 2
            phi[k] = np.cos(ang)
            phi[(k + 1) % n_arcs] = np.sin(ang)
            return phi
    phi[int(np.floor(x * n_arcs + 0.5)) % n_arcs] = 1.0
    return phi


class CoverData:
    """Finite cover of X with weights phi_i and a group-valued cocycle."""

    space = None

    def __init__(self, spec, charts):
        self.spec = spec
        self.charts = tuple(charts)

    def __len__(self):
        return len(self.charts)

    def weights(self, x):
        raise NotImplementedError

    def cocycle(self, i, j):
        """gamma_ij for chart indices i, j, or None if the charts are disjoint."""
        raise NotImplementedError

    def grid(self, n):
        raise NotImplementedError

    def cocycle_values(self):
        vals = set()
        for i in range(len(self)):
            for j in range(len(self)):
                g = self.cocycle(i, j)
                if g is not None:
                    vals.add(g)
        return sorted(vals, key=self.spec.sort_key)


class CircleCover(CoverData):
    """Cover of the circle by ``n_arcs`` arcs.

    For three or more arcs the cocycle is the generator on the overlap
    from the last arc to the first and trivial elsewhere.  With fewer arcs
    every pair of charts meets in one connected set so the cocycle is
    trivial.
    """

    space = "circle"

    def __init__(self, spec, n_arcs=3, overlap=1 / 6, generator=None):
        if n_arcs < 1:
            raise ValueError("need at least one arc")
        if n_arcs > 1 and not 0 < overlap <= 1 / n_arcs:
            raise ValueError("overlap width must lie in (0, 1/n_arcs]")
        super().__init__(spec, range(n_arcs))
        self.n_arcs = n_arcs
        self.overlap = overlap
        self.generator = tuple(generator) if generator is not None else spec.generators()[0]

    def weights(self, x):
        x = x[0] if np.ndim(x) else x
        return arc_weights(x, self.n_arcs, self.overlap)

    def cocycle(self, i, j):
        n = self.n_arcs
        e = self.spec.identity()
        if i == j:
            return e
        if n < 3:
            return e
        if (j - i) % n not in (1, n - 1):
            return None
        if (i, j) == (n - 1, 0):
            return self.generator
        if (i, j) == (0, n - 1):
            return self.spec.inverse(self.generator)
        return e

    def grid(self, n):
        return [(i / n,) for i in range(n)]


class TorusCover(CoverData):
    """Product of two circle covers; charts are pairs (k, l)."""

    space = "torus"

    def __init__(self, spec, n_arcs=3, overlap=1 / 6, generators=None):
        gens = generators if generators is not None else spec.generators()[:2]
        self.c1 = CircleCover(spec, n_arcs, overlap, gens[0])
        self.c2 = CircleCover(spec, n_arcs, overlap, gens[1])
        super().__init__(spec, [(k, l) for k in range(n_arcs) for l in range(n_arcs)])

    def weights(self, x):
        return np.outer(self.c1.weights(x[0]), self.c2.weights(x[1])).ravel()

    def cocycle(self, i, j):
        (k, l), (k2, l2) = self.charts[i], self.charts[j]
        g1, g2 = self.c1.cocycle(k, k2), self.c2.cocycle(l, l2)
        if g1 is None or g2 is None:
            return None
        return self.spec.multiply(g1, g2)

    def grid(self, n):
        return [(i / n, j / n) for i in range(n) for j in range(n)]


def single_chart_cover(spec):
    return CircleCover(spec, n_arcs=1)


# ---------------------------------------------------------------- p(x), A_pi(x)

@dataclass(frozen=True)
class FormalMatrix:
    """|I| x |I| array of coefficient times group element."""

    coefficients: np.ndarray
    elements: tuple

    def push(self, pi):
        """Replace each group element by its image under ``pi``."""
        n = len(self.elements)
        blocks = [[None] * n for _ in range(n)]
        d = None
        for i in range(n):
            for j in range(n):
                c = self.coefficients[i, j]
                if c != 0:
                    blocks[i][j] = c * pi(self.elements[i][j])
                    d = blocks[i][j].shape[0]
        if d is None:
            d = pi.dim
        if pi.sparse:
            for i in range(n):
                if blocks[i][i] is None:
                    blocks[i][i] = sp.csr_matrix((d, d), dtype=complex)
            return sp.bmat(blocks, format="csr")
        z = np.zeros((d, d), dtype=complex)
        return np.block([[z if b is None else dense(b) for b in row] for row in blocks])


def mishchenko_idempotent(cover, x):
    """p_ij(x) = phi_i(x) phi_j(x) gamma_ij as a formal matrix."""
    phi = cover.weights(x)
    n = len(phi)
    coef = np.outer(phi, phi)
    elems = []
    for i in range(n):
        row = []
        for j in range(n):
            g = cover.cocycle(i, j)
            if g is None and coef[i, j] != 0:
                raise DomainError(f"cocycle undefined on overlap ({i}, {j})")
            row.append(g)
        elems.append(tuple(row))
    return FormalMatrix(coef, tuple(elems))


def push_map(pi, cover, x):
    """A_pi(x) = (phi_i(x) phi_j(x) pi(gamma_ij))_ij."""
    return mishchenko_idempotent(cover, x).push(pi)


# ---------------------------------------------------------------- almost projections

@dataclass
class SelfadjointPair:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.a.shape != self.b.shape:
            raise ValueError("a and b must have the same shape")
        for name, M in (("a", self.a), ("b", self.b)):
            if opnorm(M - M.conj().T) > 1e-10:
                raise ValueError(f"{name} is not selfadjoint")

    def __iter__(self):
        return iter((self.a, self.b))


@dataclass
class AlmostProjection:
    P: np.ndarray
    deviation: float
    gap: float
    rank_above_half: int
    dim: int

    @classmethod
    def from_matrix(cls, P):
        P = dense(P)
        P = (P + P.conj().T) / 2
        w = np.linalg.eigvalsh(P)
        return cls.from_spectrum(P, w)

    @classmethod
    def from_spectrum(cls, P, w):
        dev = float(np.max(np.abs(w * w - w))) if w.size else 0.0
        gap = float(np.min(np.abs(w - 0.5))) if w.size else 0.5
        return cls(P, dev, gap, int(np.sum(w > 0.5)), len(w))

    def to_json(self):
        return {
            "deviation": self.deviation,
            "gap": self.gap,
            "rank_above_half": self.rank_above_half,
            "dim": self.dim,
        }


def _pair(a, b=None):
    if b is None:
        a, b = a.a, a.b
    return dense(a).astype(complex), dense(b).astype(complex)


def _clamped(w, tol):
    if w.size and (w.min() < -tol or w.max() > 1 + tol):
        raise ValueError(f"spectrum [{w.min():.3g}, {w.max():.3g}] outside [0, 1]")
    w = np.clip(w, 0.0, 1.0)
    w[w < SNAP_TOL] = 0.0
    w[w > 1 - SNAP_TOL] = 1.0
    return w


def _sqrt_part(a, f, tol=CLAMP_TOL):
    return hermitian_function(a, lambda w: f(_clamped(w, tol)))


def build_P(a, b=None, tol=CLAMP_TOL):
    """P = [[1 - b, g(a)], [g(a), a]] with g(t) = sqrt(t - t^2)."""
    a, b = _pair(a, b)
    one = np.eye(a.shape[0])
    g = _sqrt_part(a, lambda w: np.sqrt(w - w * w), tol)
    P = np.block([[one - b, g], [g, a]])
    return AlmostProjection.from_matrix(P)


def rotation_U(a, tol=CLAMP_TOL):
    """U = [[(1-a)^{1/2}, -a^{1/2}], [a^{1/2}, (1-a)^{1/2}]]."""
    a = dense(a).astype(complex)
    s = _sqrt_part(a, lambda w: np.sqrt(1 - w), tol)
    r = _sqrt_part(a, np.sqrt, tol)
    return np.block([[s, -r], [r, s]])


def build_Pprime(a, b=None, tol=CLAMP_TOL):
    """P' = U* P U, computed from the explicit block formula."""
    a, b = _pair(a, b)
    one = np.eye(a.shape[0])
    s = _sqrt_part(a, lambda w: np.sqrt(1 - w), tol)
    r = _sqrt_part(a, np.sqrt, tol)
    d = a - b
    P = np.block([[one + s @ d @ s, -s @ d @ r], [-r @ d @ s, r @ d @ r]])
    return AlmostProjection.from_matrix(P)


def pdoubleprime_matrix(a, b=None):
    a, b = _pair(a, b)
    one = np.eye(a.shape[0])
    c = one - a
    d = a - b
    return np.block([[one + c @ d @ c, -c @ d @ a], [-a @ d @ c, a @ d @ a]])


def pdoubleprime_factored(a, b=None):
    """Q + v (a - b) v* with v = (1 - a, -a)^T and Q = diag(1, 0)."""
    a, b = _pair(a, b)
    m = a.shape[0]
    v = np.vstack([np.eye(m) - a, -a])
    Q = np.zeros((2 * m, 2 * m), dtype=complex)
    Q[:m, :m] = np.eye(m)
    return Q + v @ (a - b) @ v.conj().T


def build_Pdoubleprime(a, b=None):
    return AlmostProjection.from_matrix(pdoubleprime_matrix(a, b))


def pdoubleprime_support(a, b):
    """Exact reduction of P''(a, b) for sparse a, b.

    Outside the row support C of v restricted to the support of a - b,
    P'' agrees with Q.  Returns (C, block, m) where ``block`` is the dense
    restriction of P'' to C x C and m is the size of a.
    """
    a = sp.csr_matrix(a)
    b = sp.csr_matrix(b)
    m = a.shape[0]
    D = (a - b).tocsr()
    D.eliminate_zeros()
    r, c = D.nonzero()
    S = np.unique(np.concatenate([r, c]))
    if S.size == 0:
        return np.zeros(0, dtype=int), np.zeros((0, 0), dtype=complex), m
    one = sp.identity(m, format="csr", dtype=complex)
    v = sp.vstack([one - a, -a]).tocsr()[:, S]
    v.eliminate_zeros()
    C = np.unique(v.nonzero()[0])
    vC = v[C]
    T = (vC @ D[S][:, S] @ vC.conj().T).toarray()
    T[np.arange(len(C)), np.arange(len(C))] += (C < m)
    return C, (T + T.conj().T) / 2, m


# ---------------------------------------------------------------- cutting, homotopy

def cutting(A):
    """h(A) with h the clamp of the real line to [0, 1]."""
    return hermitian_function(A, lambda w: np.clip(w, 0.0, 1.0))


def cutting_path(A, s):
    """h_s(A) = (1 - s) A + s h(A)."""
    A = dense(A)
    return (1 - s) * A + s * cutting(A)


def homotopy_path(a, b, s):
    """P''(h_s(a), h_s(b)) as an AlmostProjection."""
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    return build_Pdoubleprime(cutting_path(a, s), cutting_path(b, s))


@dataclass
class HomotopyReport:
    s: np.ndarray
    deviation: np.ndarray
    rank_above_half: np.ndarray

    @property
    def ok(self):
        return bool(np.all(self.deviation < 0.25) and np.unique(self.rank_above_half).size == 1)

    def to_json(self):
        return {
            "points": len(self.s),
            "max_deviation": float(self.deviation.max()),
            "ranks": sorted(set(int(r) for r in self.rank_above_half)),
            "ok": self.ok,
        }


def homotopy_sweep(a, b, n=101):
    ss = np.linspace(0.0, 1.0, n)
    hs = [homotopy_path(a, b, s) for s in ss]
    return HomotopyReport(ss, np.array([h.deviation for h in hs]),
                          np.array([h.rank_above_half for h in hs]))


# ---------------------------------------------------------------- universal pair

def universal_generators(t):
    """Generators a(t), b(t) of the universal algebra as 2 x 2 matrices.

    For t in [-1, 0]: a = b = diag(cos^2(pi t / 2), 0).
    For t in [0, 1]:  a = diag(1, 0), b = [[c^2, cs], [cs, s^2]] with
    c = cos(pi t / 2), s = sin(pi t / 2).
    """
    t = float(t)
    if not -1 <= t <= 1:
        raise ValueError(f"t={t} outside [-1, 1]")
    c, s = np.cos(np.pi * t / 2), np.sin(np.pi * t / 2)
    if t <= 0:
        a = np.diag([c * c, 0.0]).astype(complex)
        return SelfadjointPair(a, a.copy())
    a = np.diag([1.0, 0.0]).astype(complex)
    b = np.array([[c * c, c * s], [c * s, s * s]], dtype=complex)
    return SelfadjointPair(a, b)


def random_K2_pair(rng, blocks=3):
    """Direct sum of universal pairs at random t, conjugated by a random unitary."""
    from scipy.linalg import block_diag

    from .linalg import random_unitary

    ts = rng.uniform(-1, 1, size=blocks)
    pairs = [universal_generators(t) for t in ts]
    a = block_diag(*[p.a for p in pairs])
    b = block_diag(*[p.b for p in pairs])
    U = random_unitary(a.shape[0], rng)
    return SelfadjointPair(U @ a @ U.conj().T, U @ b @ U.conj().T)
