import numpy as np
import pytest

from balanced_pairs.groups import ball, free_abelian
from balanced_pairs.linalg import opnorm
from balanced_pairs.maps import check_K1, check_K2, defect, defect_report
from balanced_pairs.pipeline import (
    B_MINUS,
    SymbolPair,
    TorusClassComputer,
    ball_pair,
    bott_projection,
    bott_symbols,
    casewise_defect,
    cocycle_domain,
    constant_symbols,
    convergence_experiment,
    defect_column,
    input_chern,
    lipschitz_balance_check,
    m1_m2,
    pushed_pair,
)
from balanced_pairs.projections import TorusCover, pdoubleprime_matrix
from balanced_pairs.truncation import compress, RegularOperatorSpec

Z2 = free_abelian(2)
E1 = (1, 0)


def test_bott_projection_values():
    assert np.array_equal(bott_projection((0, 0), 4.0), np.diag([1.0, 0.0]))
    assert np.array_equal(bott_projection((3, 3), 4.0), B_MINUS)
    for y in [(1, 0), (2, -1), (0.3, 1.7)]:
        B = bott_projection(y, 4.0, winding=2, profile="smoothstep")
        assert np.allclose(B, B.conj().T, atol=1e-15)
        assert np.allclose(B @ B, B, atol=1e-14)
        assert np.trace(B).real == pytest.approx(1.0)


def test_bott_symbols_agree_outside_support():
    s = bott_symbols(3.5)
    for y in ball(Z2, 8):
        if np.hypot(*y) >= 3.5:
            assert np.array_equal(s.plus(y), s.minus(y))
    with pytest.raises(ValueError):
        bott_symbols(3.0, profile="cubic")


def test_variation_shrinks_with_larger_support():
    steps = ball(Z2, 1).elements
    d1 = bott_symbols(3.0).variation(steps, 8)
    d2 = bott_symbols(6.0).variation(steps, 10)
    assert d2 < 0.6 * d1


def test_identity_symbols_give_regular_representation():
    s = constant_symbols(Z2, np.eye(2))
    plus, minus = ball_pair(s, 3, ball(Z2, 2).elements)
    for g in ball(Z2, 2):
        ref = compress(RegularOperatorSpec(Z2, 2, g), 3)
        assert (plus(g) != ref).nnz == 0
    rep = defect_report((plus, minus), ball(Z2, 1).elements)
    assert rep.eps2 == rep.eps2prime == 0.0


def test_equal_symbols_give_zero_balancedness():
    M = np.array([[0.3, 0.2j], [-0.2j, 0.9]])
    s = SymbolPair(Z2, lambda y: M * (1 + y[0] ** 2), lambda y: M * (1 + y[0] ** 2), 0.0)
    pair = ball_pair(s, 4, ball(Z2, 2).elements)
    assert defect_report(pair, ball(Z2, 1).elements).eps2 == 0.0


@pytest.fixture(scope="module")
def bott6():
    s = bott_symbols(4.0)
    raw = ball_pair(s, 6, ball(Z2, 4).elements, symmetrize=False)
    return s, raw


def test_casewise_cases(bott6):
    s, raw = bott6
    # interior with locally constant projection symbol
    cw = casewise_defect(s, 6, E1, E1, (5, 0), "-")
    assert cw.case == 3 or np.abs(cw.value).max() == 0
    cw = casewise_defect(s, 6, E1, E1, (0, 0), "-")
    assert cw.case == 1 and np.abs(cw.value).max() == 0
    # hy leaves the ball, ghy comes back
    cw = casewise_defect(s, 6, (-1, 0), (1, 0), (6, 0), "+")
    assert cw.case == 2 and np.array_equal(cw.value, s.plus((6, 0)))
    cw = casewise_defect(s, 6, (1, 0), (1, 0), (6, 0), "+")
    assert cw.case == 3 and not np.any(cw.value)
    with pytest.raises(ValueError):
        casewise_defect(s, 6, E1, E1, (7, 0))


def test_casewise_matches_dense(bott6, rng):
    s, raw = bott6
    Y = ball(Z2, 6)
    G = ball(Z2, 2).elements
    for _ in range(60):
        g, h = G[rng.integers(len(G))], G[rng.integers(len(G))]
        y = Y.elements[rng.integers(len(Y))]
        sign = "+-"[rng.integers(2)]
        col = defect_column(raw[0] if sign == "+" else raw[1], g, h, y, Y, 2)
        cw = casewise_defect(s, 6, g, h, y, sign)
        expected = np.zeros_like(col)
        if cw.target in Y:
            j = Y.position(cw.target)
            expected[2 * j:2 * j + 2] = cw.value
        assert np.abs(col - expected).max() < 1e-12


def test_m1_m2_matches_norm(bott6):
    s, raw = bott6
    for g in ball(Z2, 2):
        for h in ball(Z2, 1):
            mm = m1_m2(s, g, h, 6)
            gap = opnorm(defect(raw[0], g, h) - defect(raw[1], g, h))
            assert abs(mm.value - gap) < 1e-10


def test_m1_m2_trivial_cases():
    s = constant_symbols(Z2, np.diag([1.0, 0.0]))
    mm = m1_m2(s, E1, E1, 4)
    assert (mm.m1, mm.m2) == (0.0, 0.0)
    small = bott_symbols(2.0)
    mm = m1_m2(small, (-1, 0), E1, 8)
    assert mm.m1 == 0.0 and not mm.m1_empty
    mm = m1_m2(small, (0, 0), (0, 0), 3)
    assert mm.m1_empty and mm.m1 == 0.0


def test_lipschitz_constant_symbols():
    s = constant_symbols(Z2, np.diag([0.7, 0.2]), np.diag([0.4, 0.0]))
    rep = lipschitz_balance_check(s, ball(Z2, 1).elements, 4)
    assert rep.delta == 0.0
    assert rep.discrepancy < 1e-10 and rep.ok
    same = constant_symbols(Z2, np.diag([0.7, 0.2]))
    rep = lipschitz_balance_check(same, ball(Z2, 1).elements, 4)
    assert rep.poly_gap == (0.0, 0.0) and rep.interior_eps == (0.0, 0.0)


def test_lipschitz_bott_scales_with_variation():
    F = ball(Z2, 1).elements
    coarse = lipschitz_balance_check(bott_symbols(3.0), F, 8)
    fine = lipschitz_balance_check(bott_symbols(6.0), F, 11)
    assert coarse.ok and fine.ok
    assert fine.delta < coarse.delta
    assert fine.discrepancy < coarse.discrepancy
    assert fine.discrepancy / fine.delta < 2 * coarse.discrepancy / coarse.delta


def test_convergence_equal_symbols_is_zero():
    s = constant_symbols(Z2, np.diag([1.0, 0.0]))
    cov = TorusCover(Z2, 3, 1 / 6)
    res = convergence_experiment(s, cov, [2, 3], R_star=5, grid_n=3)
    assert all(r["sup_norm_gap"] == 0.0 for r in res["rows"])


def test_convergence_small_bott():
    s = bott_symbols(2.0)
    cov = TorusCover(Z2, 3, 1 / 6)
    res = convergence_experiment(s, cov, [1, 2, 3, 4, 5], R_star=8, grid_n=6)
    gaps = [r["sup_norm_gap"] for r in res["rows"]]
    assert gaps[0] > gaps[1] > gaps[2] > 0
    # the symbol difference and its cocycle translates fit inside Ball(4)
    assert gaps[3] == gaps[4] == 0.0


@pytest.fixture(scope="module")
def small_torus():
    s = bott_symbols(2.0, profile="smoothstep")
    cov = TorusCover(Z2, 3, 1 / 6)
    pair = ball_pair(s, 3, cocycle_domain(cov))
    return s, cov, pair


def test_class_reduction_matches_dense_plaquettes(small_torus):
    s, cov, pair = small_torus
    comp = TorusClassComputer(pair, cov)
    n = 6

    def frame(x):
        a, b = pushed_pair(pair, cov, x)
        w, V = np.linalg.eigh(pdoubleprime_matrix(a.toarray(), b.toarray()))
        return V[:, w > 0.5]

    for i, j in [(4, 4), (5, 5), (2, 5)]:
        corners = [(a / n, b / n) for a, b in [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]]
        fr = [frame(x) for x in corners]
        dense = np.prod([np.linalg.det(fr[p].conj().T @ fr[(p + 1) % 4]) for p in range(4)])
        _, ph = comp.plaquette(corners)
        assert abs(np.angle(dense * np.exp(-1j * ph))) < 1e-9


def test_small_torus_rank_field(small_torus):
    s, cov, pair = small_torus
    out = TorusClassComputer(pair, cov).run(12)
    assert out["rank_constant"] and out["class_rank"] == 0


def test_frame_cache_budget_does_not_change_result(small_torus):
    s, cov, pair = small_torus
    full = TorusClassComputer(pair, cov).run(12)
    tight = TorusClassComputer(pair, cov, frame_budget=0).run(12)
    assert tight["chern_raw"] == pytest.approx(full["chern_raw"], abs=1e-9)
    assert tight["frames"] >= full["frames"]


def test_small_torus_rank_field_R8():
    s = bott_symbols(2.5)
    cov = TorusCover(Z2, 3, 1 / 6)
    pair = ball_pair(s, 8, cocycle_domain(cov))
    out = TorusClassComputer(pair, cov).run(12)
    assert out["rank_constant"] and out["class_rank"] == 0
    assert out["deviation_max"] < 0.25


@pytest.mark.parametrize("winding", [1, -1, 2])
def test_input_chern(winding):
    c, det = input_chern(bott_symbols(4.0, winding=winding), n=80)
    assert c == winding
    assert det["max_phase"] < 1.0


def test_pushed_pair_K_deltas_below_chart_count_times_eps():
    s = bott_symbols(2.0)
    cov = TorusCover(s.spec, 3, 1 / 6)
    F = cocycle_domain(cov)
    rep = defect_report(ball_pair(s, 4, ball(s.spec, 4).elements), F, None)
    bound = len(cov) * max(rep.eps1, rep.eps2, rep.eps2prime)
    pair = ball_pair(s, 4, F)
    for x in cov.grid(5):
        a, b = (m.toarray() for m in pushed_pair(pair, cov, x))
        assert max(check_K1(a, b) + check_K2(a, b)) <= bound
