import numpy as np
import pytest

from balanced_pairs.errors import ResourceCapError
from balanced_pairs.groups import ball, free_abelian, free_group
from balanced_pairs.linalg import opnorm
from balanced_pairs.maps import defect
from balanced_pairs.pipeline import bott_symbols
from balanced_pairs.truncation import (
    RegularOperatorSpec,
    compress,
    family_rows,
    interpolate,
    truncate_pair,
)

Z1, Z2, F2 = free_abelian(1), free_abelian(2), free_group(2)


def test_identity_compresses_to_identity():
    for spec in (Z2, F2):
        M = compress(RegularOperatorSpec(spec, 2, spec.identity()), 2).toarray()
        assert np.array_equal(M, np.eye(M.shape[0]))


def test_shift_on_small_ball():
    M = compress(RegularOperatorSpec(Z1, 1, (1,)), 1).toarray().real
    # basis order 0, -1, 1
    expected = np.array([[0, 1, 0], [0, 0, 0], [1, 0, 0]])
    assert np.array_equal(M, expected)


def test_multiplication_symbol_is_block_diagonal():
    sym = lambda y: np.array([[y[0], 1j], [-1j, y[1]]])
    M = compress(RegularOperatorSpec(Z2, 2, symbol=sym), 2).toarray()
    Y = ball(Z2, 2)
    for k, y in enumerate(Y):
        assert np.array_equal(M[2 * k:2 * k + 2, 2 * k:2 * k + 2], sym(y))
    mask = np.kron(np.eye(len(Y)), np.ones((2, 2))) == 0
    assert not np.any(M[mask])


def test_compression_cap():
    with pytest.raises(ResourceCapError):
        compress(RegularOperatorSpec(Z2, 2, (1, 0)), 40, max_dim=100)


@pytest.mark.parametrize("spec", [Z2, F2])
def test_adjoint_is_inverse_compression(spec):
    for g in ball(spec, 2):
        A = compress(RegularOperatorSpec(spec, 1, g), 3)
        B = compress(RegularOperatorSpec(spec, 1, spec.inverse(g)), 3)
        assert (A.conj().T != B).nnz == 0


@pytest.mark.parametrize("spec", [Z2, F2])
def test_finite_propagation(spec):
    R = 4
    Y = ball(spec, R)
    for g in ball(spec, 1):
        for h in ball(spec, 2):
            A = compress(RegularOperatorSpec(spec, 1, g), R)
            B = compress(RegularOperatorSpec(spec, 1, h), R)
            C = compress(RegularOperatorSpec(spec, 1, spec.multiply(g, h)), R)
            D = (A @ B - C).toarray()
            for k, y in enumerate(Y):
                hy = spec.multiply(h, y)
                if hy in Y and spec.multiply(g, hy) in Y:
                    assert not np.any(D[:, k])


def test_defect_vanishes_on_interior():
    R = 5
    fam = truncate_pair(Z2, None, None, [R], ball(Z2, 4).elements)
    pi = fam.pairs[R][0]
    Y = ball(Z2, R)
    for g in ball(Z2, 2):
        for h in ball(Z2, 2):
            M = defect(pi, g, h).toarray()
            depth = max(Z2.length(g), Z2.length(h), Z2.length(Z2.multiply(g, h)))
            for k, y in enumerate(Y):
                if Z2.length(y) <= R - depth:
                    assert not np.any(M[:, k])


def test_regular_pair_has_zero_epsilons():
    fam = truncate_pair(F2, None, None, [1, 2, 3], ball(F2, 2).elements)
    for row in family_rows(fam, ball(F2, 1).elements, 1):
        assert row["eps1"] == row["eps2"] == row["eps2prime"] == 0.0


def test_radii_must_increase():
    with pytest.raises(ValueError):
        truncate_pair(Z1, None, None, [3, 3], ball(Z1, 2).elements)


@pytest.fixture(scope="module")
def bott_family():
    s = bott_symbols(R0=3.0)
    return truncate_pair(Z2, s.plus, s.minus, [5, 6, 12], ball(Z2, 2).elements, fiber_dim=2)


def test_bott_family_nonincreasing(bott_family):
    rows = family_rows(bott_family, ball(Z2, 1).elements, 1)
    for key in ("eps1", "eps2", "eps2prime"):
        vals = [r[key] for r in rows]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:])), (key, vals)


def test_maps_are_star_symmetric(bott_family):
    plus, _ = bott_family.pairs[6]
    for g in plus.domain:
        assert opnorm(plus(Z2.inverse(g)) - plus(g).conj().T) == 0.0


@pytest.fixture(scope="module")
def shift_family():
    return truncate_pair(Z1, None, None, [2, 3, 5], ball(Z1, 2).elements)


def test_interpolation_endpoints(shift_family):
    lo, hi = shift_family.pairs[2][0], shift_family.pairs[3][0]
    p0, _ = interpolate(shift_family, 0.0)
    p1, _ = interpolate(shift_family, 1.0)
    for g in lo.domain:
        A = p0(g).toarray()
        n = lo.dim
        assert np.array_equal(A[:n, :n], lo(g).toarray())
        assert not np.any(A[n:]) and not np.any(A[:, n:])
        # t = 1 opens the next interval, so pi_3 sits padded in the radius-5 basis
        B = p1(g).toarray()
        assert np.array_equal(B[:hi.dim, :hi.dim], hi(g).toarray())
        assert not np.any(B[hi.dim:])
    last, _ = interpolate(shift_family, 2.0)
    assert np.array_equal(last((1,)).toarray(), shift_family.pairs[5][0]((1,)).toarray())


def test_interpolation_range(shift_family):
    for t in (-0.1, 2.5):
        with pytest.raises(ValueError):
            interpolate(shift_family, t)


def test_interpolation_midpoint_and_cross_term(shift_family):
    lo, hi = shift_family.pairs[2][0], shift_family.pairs[3][0]
    mid, _ = interpolate(shift_family, 0.5)
    n, N = lo.dim, hi.dim

    def pad(M):
        out = np.zeros((N, N), dtype=complex)
        out[:n, :n] = M.toarray()
        return out

    for g in lo.domain:
        assert np.allclose(mid(g).toarray(), (pad(lo(g)) + hi(g).toarray()) / 2, atol=0)
    # defect of the blend: average of defects plus s(1-s) times a cross term
    s = 0.5
    worst_end = 0.0
    for g in ball(Z1, 1):
        for h in ball(Z1, 1):
            Ma = pad(lo(Z1.multiply(g, h))) - pad(lo(g)) @ pad(lo(h))
            Mb = (defect(hi, g, h)).toarray()
            dg = pad(lo(g)) - hi(g).toarray()
            dh = pad(lo(h)) - hi(h).toarray()
            Mt = defect(mid, g, h).toarray()
            assert np.allclose(Mt, (1 - s) * Ma + s * Mb + s * (1 - s) * dg @ dh, atol=1e-12)
            bound = max(opnorm(Ma), opnorm(Mb)) + s * (1 - s) * opnorm(dg) * opnorm(dh)
            assert opnorm(Mt) <= bound + 1e-12
            worst_end = max(worst_end, opnorm(Mt))
    assert worst_end > 0
