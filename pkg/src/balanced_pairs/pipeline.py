"""Lattice example: Bott-type symbols on Z^2, ball truncations, covers of T^2.

The group Z^2 acts on l^2(Y) (x) C^2 with Y the Cayley ball of radius R.
Each pair of symbols B+, B- defines maps pi_s(g) = P_R lambda(g) M_{B_s} P_R.
Pushing them through a cover of the torus gives selfadjoint pairs
A+(x), A-(x) and the almost projections P''(A+(x), A-(x)).
"""

from __future__ import annotations

import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .groups import ball as make_ball, free_abelian
from .kclass import ChernReport, ReducedFrame, chern_number, reduced_link
from .linalg import hermitian_norm
from .maps import FiniteMap, defect
from .projections import mishchenko_idempotent, pdoubleprime_support
from .truncation import _block, _check_dim, truncated_map

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
B_MINUS = np.diag([0.0, 1.0]).astype(complex)

PROFILES = {
    "linear": lambda s: s,
    "smoothstep": lambda s: s * s * (3 - 2 * s),
}


# ---------------------------------------------------------------- symbols

@dataclass
class SymbolPair:
    """Two matrix-valued functions on the group that agree far out."""

    spec: object
    plus: Callable
    minus: Callable
    R0: float
    fiber_dim: int = 2
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def variation(self, steps, R):
        """max ||B(hy) - B(y)|| over y, hy in Ball(R), h in ``steps``, both symbols."""
        Y = make_ball(self.spec, R)
        best = 0.0
        for fn in (self.plus, self.minus):
            vals = {y: np.asarray(fn(y)) for y in Y}
            for h in steps:
                for y in Y:
                    z = self.spec.multiply(h, y)
                    if z in vals:
                        best = max(best, np.linalg.norm(vals[z] - vals[y], 2))
        return best


def bott_projection(y, R0, winding=1, profile="linear"):
    """Rank-one projection (1 + n.sigma)/2 with n(y) on the unit sphere.

    n points up at the origin and down (giving diag(0, 1)) for |y| >= R0.
    """
    y1, y2 = float(y[0]), float(y[1])
    r = np.hypot(y1, y2)
    if r >= R0:
        return B_MINUS.copy()
    th = np.pi * PROFILES[profile](r / R0)
    ph = winding * np.arctan2(y2, y1)
    n = (np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th))
    return (np.eye(2) + n[0] * SIGMA[0] + n[1] * SIGMA[1] + n[2] * SIGMA[2]) / 2


def bott_symbols(R0=6.5, winding=1, profile="linear"):
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    spec = free_abelian(2)
    return SymbolPair(
        spec,
        lambda y: bott_projection(y, R0, winding, profile),
        lambda y: B_MINUS,
        R0,
        2,
        "bott",
        {"R0": R0, "winding": winding, "profile": profile},
    )


def constant_symbols(spec, plus, minus=None):
    plus = np.asarray(plus, dtype=complex)
    minus = plus if minus is None else np.asarray(minus, dtype=complex)
    return SymbolPair(spec, lambda y: plus, lambda y: minus, 0.0, plus.shape[0], "constant")


# ---------------------------------------------------------------- ball pairs

def ball_pair(symbols, R, domain, symmetrize=True):
    """(pi+, pi-) on Ball(R) (x) C^n tabulated over ``domain``.

    With ``symmetrize=False`` every g gets the plain compression
    P_R lambda(g) M_B P_R; such tables need not be *-symmetric.
    """
    spec, nv = symbols.spec, symbols.fiber_dim
    if symmetrize:
        return tuple(truncated_map(spec, R, f, domain, nv) for f in (symbols.plus, symbols.minus))
    Y = make_ball(spec, R)
    _check_dim(Y, nv)
    out = []
    for f in (symbols.plus, symbols.minus):
        table = {tuple(g): _block(Y, tuple(g), f, nv, spec) for g in domain}
        out.append(FiniteMap(spec, table, check=False))
    return tuple(out)


@dataclass
class CasewiseDefect:
    case: int
    value: np.ndarray
    target: tuple


def casewise_defect(symbols, R, g, h, y, sign="+"):
    """Closed-form column of M_pi(g,h) at delta_y for the plain compressions.

    Case 1 (hy, ghy in Y): (1 - B(hy)) B(y).  Case 2 (hy outside, ghy in Y):
    B(y).  Case 3: 0.  The value sits in the block row of ghy.
    """
    spec = symbols.spec
    Y = make_ball(spec, R)
    if y not in Y:
        raise ValueError(f"{y} not in Ball({R})")
    B = symbols.plus if sign == "+" else symbols.minus
    hy = spec.multiply(h, y)
    ghy = spec.multiply(g, hy)
    n = symbols.fiber_dim
    if hy in Y and ghy in Y:
        return CasewiseDefect(1, (np.eye(n) - B(hy)) @ B(y), ghy)
    if ghy in Y:
        return CasewiseDefect(2, np.asarray(B(y), dtype=complex), ghy)
    return CasewiseDefect(3, np.zeros((n, n), dtype=complex), ghy)


def defect_column(pi, g, h, y, Y, n):
    """Dense column block of M_pi(g,h) at delta_y (x) C^n."""
    M = defect(pi, g, h)
    k = Y.position(y)
    col = M[:, k * n:(k + 1) * n]
    return col.toarray() if sp.issparse(col) else np.asarray(col)


@dataclass
class M1M2:
    m1: float
    m2: float
    m1_empty: bool
    m2_empty: bool

    @property
    def value(self):
        return max(self.m1, self.m2)


def m1_m2(symbols, g, h, R):
    """Suprema over the boundary case and the interior case of the defect gap."""
    spec = symbols.spec
    Y = make_ball(spec, R)
    n = np.eye(symbols.fiber_dim)
    m1 = m2 = 0.0
    e1 = e2 = True
    for y in Y:
        hy = spec.multiply(h, y)
        ghy = spec.multiply(g, hy)
        if ghy not in Y:
            continue
        Bp, Bm = symbols.plus(y), symbols.minus(y)
        if hy in Y:
            v = (n - symbols.plus(hy)) @ Bp - (n - symbols.minus(hy)) @ Bm
            m2, e2 = max(m2, np.linalg.norm(v, 2)), False
        else:
            m1, e1 = max(m1, np.linalg.norm(Bp - Bm, 2)), False
    return M1M2(float(m1), float(m2), e1, e2)


# ---------------------------------------------------------------- Lipschitz check

LIPSCHITZ_C = 6.0


@dataclass
class LipschitzReport:
    delta: float
    poly_gap: tuple
    interior_eps: tuple
    discrepancy: float
    C: float

    @property
    def ok(self):
        return self.discrepancy <= self.C * self.delta + 1e-10

    def to_json(self):
        return {
            "delta": self.delta,
            "poly_gap": list(self.poly_gap),
            "interior_eps": list(self.interior_eps),
            "discrepancy": self.discrepancy,
            "C": self.C,
            "ok": self.ok,
        }


def lipschitz_balance_check(symbols, F, R, C=LIPSCHITZ_C):
    """Compare sup ||p(B+(y)) - p(B-(y))|| with the interior balancedness.

    p runs over t(1-t) and t^2(1-t).  The interior quantities are the
    defect gaps of conditions (2) and (2') restricted to y with every
    translate needed by the closed form still inside the ball.
    """
    spec = symbols.spec
    Y = make_ball(spec, R)
    F = [tuple(g) for g in F]
    one = np.eye(symbols.fiber_dim)
    Bp = {y: np.asarray(symbols.plus(y)) for y in Y}
    Bm = {y: np.asarray(symbols.minus(y)) for y in Y}

    def p1(B):
        return B @ (one - B)

    def p2(B):
        return B @ B @ (one - B)

    gap1 = max(np.linalg.norm(p1(Bp[y]) - p1(Bm[y]), 2) for y in Y)
    gap2 = max(np.linalg.norm(p2(Bp[y]) - p2(Bm[y]), 2) for y in Y)
    bal1 = bal2 = 0.0
    steps = set()
    for g in F:
        for h in F:
            steps.update({h, spec.multiply(g, h)})
            for k in F:
                steps.add(spec.multiply(k, spec.multiply(g, h)))
            for y in Y:
                hy = spec.multiply(h, y)
                ghy = spec.multiply(g, hy)
                if hy not in Y or ghy not in Y:
                    continue
                dp = (one - Bp[hy]) @ Bp[y]
                dm = (one - Bm[hy]) @ Bm[y]
                bal1 = max(bal1, np.linalg.norm(dp - dm, 2))
                for k in F:
                    kz = spec.multiply(k, ghy)
                    if kz in Y:
                        v = Bp[ghy] @ dp - Bm[ghy] @ dm
                        bal2 = max(bal2, np.linalg.norm(v, 2))
    delta = symbols.variation(sorted(steps, key=spec.sort_key), R)
    disc = max(abs(bal1 - gap1), abs(bal2 - gap2))
    return LipschitzReport(float(delta), (float(gap1), float(gap2)),
                           (float(bal1), float(bal2)), float(disc), C)


# ---------------------------------------------------------------- pushed pairs

def pushed_pair(pair, cover, x):
    """A+(x), A-(x) as sparse matrices."""
    p = mishchenko_idempotent(cover, x)
    return p.push(pair[0]), p.push(pair[1])


def _offdiag(a, b):
    """P''(a, b) - Q as a sparse matrix."""
    m = a.shape[0]
    D = (a - b).tocsr()
    one = sp.identity(m, format="csr", dtype=complex)
    v = sp.vstack([one - a, -a]).tocsr()
    return (v @ D @ v.conj().T).tocsr()


def _lift(X, n_charts, N, Nstar):
    """Re-index (half, chart, k) coordinates from block size N to Nstar."""
    X = X.tocoo()

    def f(idx):
        half, rest = divmod(idx, n_charts * N)
        chart, k = divmod(rest, N)
        return half * n_charts * Nstar + chart * Nstar + k

    size = 2 * n_charts * Nstar
    return sp.csr_matrix((X.data, (f(X.row), f(X.col))), shape=(size, size))


def cocycle_domain(cover):
    """Symmetric set of group elements the cover's cocycle takes."""
    vals = set(cover.cocycle_values())
    return sorted(vals | {cover.spec.inverse(g) for g in vals}, key=cover.spec.sort_key)


def convergence_experiment(symbols, cover, radii, R_star=None, grid_n=6):
    """sup over grid of ||P''(A_R) - P''(A_{R*})|| for each radius.

    P''_R - Q_R is compared with P''_{R*} - Q_{R*} after re-indexing the
    Ball(R) coordinates as the prefix of the Ball(R*) coordinates.
    """
    radii = [int(r) for r in radii]
    if R_star is None:
        R_star = 2 * max(radii)
    dom = cocycle_domain(cover)
    grid = cover.grid(grid_n)
    n_ch = len(cover)
    nv = symbols.fiber_dim
    t0 = time.perf_counter()
    star = ball_pair(symbols, R_star, dom)
    Nstar = star[0].dim
    ref = [_offdiag(*pushed_pair(star, cover, x)) for x in grid]
    t_star = time.perf_counter() - t0
    rows = []
    for R in radii:
        t0 = time.perf_counter()
        pair = ball_pair(symbols, R, dom)
        N = pair[0].dim
        gap = 0.0
        for x, X_ref in zip(grid, ref):
            X = _lift(_offdiag(*pushed_pair(pair, cover, x)), n_ch, N, Nstar)
            gap = max(gap, hermitian_norm(X - X_ref))
        rows.append({"R": R, "dim": N, "sup_norm_gap": gap,
                     "wall_time": time.perf_counter() - t0})
    return {"R_star": R_star, "dim_star": Nstar, "grid_n": grid_n,
            "reference_time": t_star, "fiber_dim": nv, "rows": rows}


# ---------------------------------------------------------------- torus class data

def _min_rotation(phat):
    """Rotation taking e_1 to the unit vector ``phat``, smooth for phat_1 > -1."""
    k = len(phat)
    e = np.zeros(k)
    e[0] = 1.0
    K = np.outer(phat, e) - np.outer(e, phat)
    return np.eye(k) + K + K @ K / (1.0 + phat[0])


class TorusClassComputer:
    """Frames of P''(A+(x), A-(x)) over a torus grid, with chart-class reduction.

    Around one plaquette the charts active at any of its corners split into
    classes with identical cocycle rows.  With rho_c the norm of the weights
    of class c and phihat_c = phi_c / rho_c, A(x) is unitarily equivalent to
    Atilde(x) (+) 0 with Atilde_{cc'} = rho_c rho_c' pi(gamma_{cc'}), where
    the unitary is built from rotations taking e_1 to phihat_c.  Between two
    corners the overlap of frames then reduces to det(Vt* D Vt') times a
    positive factor, D being 1/t_c on the first half and t_c on the second
    half of class c with t_c = phihat_c . phihat_c'.
    """

    def __init__(self, pair, cover, frame_budget=1.5e9):
        self.pair = pair
        self.cover = cover
        self.N = pair[0].dim
        # least recently used frames are dropped beyond frame_budget bytes;
        # row-major traversal only revisits the previous row
        self.frame_budget = frame_budget
        self._frames = OrderedDict()
        self._frame_bytes = 0
        self.frames_computed = 0
        self._links = {}
        self._weights = {}
        self.vertex_info = {}

    def weights(self, x):
        key = tuple(np.round(x, 12))
        if key not in self._weights:
            self._weights[key] = self.cover.weights(x)
        return self._weights[key]

    def _classes(self, U):
        rows = {}
        for i in U:
            row = []
            for j in U:
                g = self.cover.cocycle(i, j)
                if g is None:
                    raise ValueError("plaquette spans disjoint charts; refine the grid")
                row.append(g)
            rows.setdefault(tuple(row), []).append(i)
        return list(rows.values())

    def frame(self, gam, rho):
        key = (gam, tuple(np.round(rho, 13)))
        F = self._frames.get(key)
        if F is not None:
            self._frames.move_to_end(key)
        else:
            k = len(rho)
            blocks = []
            for s in (0, 1):
                bl = [[None] * k for _ in range(k)]
                for c in range(k):
                    for d in range(k):
                        w = rho[c] * rho[d]
                        if w != 0:
                            bl[c][d] = w * self.pair[s](gam[c][d])
                    if bl[c][c] is None:
                        bl[c][c] = sp.csr_matrix((self.N, self.N), dtype=complex)
                blocks.append(sp.bmat(bl, format="csr"))
            C, block, m = pdoubleprime_support(*blocks)
            F = ReducedFrame.from_block(C, block, m)
            # links are cached per frame instance: a recomputed frame has its own gauge
            F.uid = self.frames_computed
            self._frames[key] = F
            self._frame_bytes += F.V.nbytes
            self.frames_computed += 1
            while self._frame_bytes > self.frame_budget and len(self._frames) > 1:
                _, old = self._frames.popitem(last=False)
                self._frame_bytes -= old.V.nbytes
        return F

    def plaquette(self, corners):
        phis = [self.weights(x) for x in corners]
        U = np.flatnonzero(np.any(np.array(phis) > 0, axis=0))
        classes = self._classes(U)
        gam = tuple(tuple(self.cover.cocycle(c[0], d[0]) for d in classes) for c in classes)
        rhos, hats = [], []
        for phi in phis:
            rho = np.array([np.linalg.norm(phi[c]) for c in classes])
            rhos.append(rho)
            hats.append([phi[c] / r if r > 0 else None for c, r in zip(classes, rho)])
        for ci in range(len(classes)):
            ref = next(h[ci] for h in hats if h[ci] is not None)
            for h in hats:
                if h[ci] is None:
                    h[ci] = ref
        frames = [self.frame(gam, rho) for rho in rhos]
        total = 1.0 + 0j
        for p in range(4):
            q = (p + 1) % 4
            total *= self._link(frames[p], frames[q], hats[p], hats[q])
        return frames, np.angle(total)

    def _link(self, F1, F2, h1, h2):
        sign = 1
        for a, b in zip(h1, h2):
            if len(a) > 1:
                R = _min_rotation(a).T @ _min_rotation(b)
                if np.linalg.det(R[1:, 1:]) < 0:
                    sign *= (-1) ** self.N
        if F1 is F2:
            # det of a positive definite Hermitian form
            return complex(sign)
        t = np.array([float(a @ b) for a, b in zip(h1, h2)])
        key = (F1.uid, F2.uid, tuple(np.round(t, 13)))
        val = self._links.get(key)
        if val is None:
            N = self.N
            w = np.concatenate([np.repeat(1.0 / t, N), np.repeat(t, N)])
            val = reduced_link(F1, F2, w)
            self._links[key] = val
        return sign * val

    def run(self, n, max_phase=0.9 * np.pi):
        """Chern number and rank field on the n x n grid of the torus."""
        t0 = time.perf_counter()
        ph = np.zeros((n, n))
        ranks = np.zeros((n, n), dtype=int)
        gaps = np.zeros((n, n))
        devs = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                idx = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
                corners = [(a / n, b / n) for a, b in idx]
                frames, ph[i, j] = self.plaquette(corners)
                F = frames[0]
                ranks[i, j] = F.class_rank
                gaps[i, j] = F.gap
                devs[i, j] = F.deviation
        total = ph.sum() / (2 * np.pi)
        return {
            "grid": n,
            "chern": int(np.rint(total)),
            "chern_raw": float(total),
            "max_phase": float(np.abs(ph).max()),
            "phase_ok": bool(np.abs(ph).max() < max_phase),
            "ranks": ranks,
            "rank_constant": bool(np.all(ranks == ranks[0, 0])),
            "class_rank": int(ranks[0, 0]),
            "gap_min": float(gaps.min()),
            "deviation_max": float(devs.max()),
            "frames": self.frames_computed,
            "wall_time": time.perf_counter() - t0,
        }


def input_chern(symbols, n=160, extent=1.2):
    """Chern number of the B+ field over the square [-L, L]^2, L = extent * R0.

    B+ equals the constant B- on the boundary, so the square closes up to a
    sphere and the open plaquette sum is an integer.
    """
    L = extent * symbols.R0
    xs = np.linspace(-L, L, n + 1)
    field = [[symbols.plus((a, b)) for b in xs] for a in xs]
    return chern_number(field, periodic=False, return_details=True)


def torus_chern(symbols, cover, R, grids=(24, 48), input_grid=160):
    """Input and output Chern numbers plus the rank field on each grid."""
    pair = ball_pair(symbols, R, cocycle_domain(cover))
    comp = TorusClassComputer(pair, cover)
    outs = [comp.run(n) for n in grids]
    cin, det = input_chern(symbols, input_grid)
    couts = {o["grid"]: o["chern"] for o in outs}
    stable = len(set(couts.values())) == 1
    cout = outs[-1]["chern"]
    report = ChernReport(
        cin,
        cout,
        bool(stable and cin == cout and all(o["phase_ok"] for o in outs)),
        {
            "R": R,
            "input": det,
            "output": [{k: v for k, v in o.items() if k != "ranks"} for o in outs],
        },
    )
    return report, outs
