import numpy as np
import pytest

from balanced_pairs.errors import GapClosedError
from balanced_pairs.groups import free_abelian
from balanced_pairs.kclass import (
    ReducedFrame,
    chern_number,
    rank_field,
    reduced_link,
    spectral_class,
)
from balanced_pairs.maps import FiniteMap
from balanced_pairs.pipeline import cocycle_domain
from balanced_pairs.projections import (
    AlmostProjection,
    TorusCover,
    build_Pdoubleprime,
    homotopy_path,
    mishchenko_idempotent,
    universal_generators,
)
from balanced_pairs.linalg import random_selfadjoint, random_unitary

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)


def two_band(k1, k2, mass):
    d = np.array([np.sin(k1), np.sin(k2), mass + np.cos(k1) + np.cos(k2)])
    d /= np.linalg.norm(d)
    return (np.eye(2) + d[0] * SX + d[1] * SY + d[2] * SZ) / 2


def two_band_field(n, mass):
    ks = 2 * np.pi * np.arange(n) / n
    return [[two_band(a, b, mass) for b in ks] for a in ks]


def test_spectral_class_examples():
    assert spectral_class(np.diag([1.0, 0, 1, 0])) == 0
    P = build_Pdoubleprime(np.eye(1), np.zeros((1, 1)))
    assert spectral_class(P, q_rank=1) == 1
    a, b = np.diag([1.0, 1, 0]), np.diag([1.0, 0, 0])
    assert spectral_class(build_Pdoubleprime(a, b)) == 1
    assert spectral_class(build_Pdoubleprime(b, a)) == -1


def test_spectral_class_gap_closed():
    with pytest.raises(GapClosedError):
        spectral_class(np.diag([1.0, 0.5]))


def test_spectral_class_unitary_invariance(rng):
    a, b = np.diag([1.0, 1, 0, 0]), np.diag([0.0, 0, 0, 1])
    P = build_Pdoubleprime(a + random_selfadjoint(4, rng, 0.01), b)
    U = random_unitary(8, rng)
    assert spectral_class(P) == spectral_class(U @ P.P @ U.conj().T) == 1


def test_spectral_class_along_homotopy(rng):
    a, b = universal_generators(0.4)
    a = 1.05 * a + random_selfadjoint(2, rng, 1e-3)
    vals = {spectral_class(homotopy_path(a, b, s)) for s in np.linspace(0, 1, 21)}
    assert vals == {0}


def test_rank_field_constant_pair():
    field = [build_Pdoubleprime(np.eye(2), np.eye(2)) for _ in range(6)]
    rep = rank_field(field, shape=(2, 3))
    assert rep.constant and rep.class_rank == 0 and rep.ranks == [[0, 0, 0], [0, 0, 0]]


def test_rank_field_exact_representation():
    spec = free_abelian(2)
    cov = TorusCover(spec, 3, 1 / 6)
    dom = cocycle_domain(cov)
    chars = [FiniteMap(spec, {g: np.array([[np.exp(1j * np.dot(th, g))]]) for g in dom})
             for th in ((0.3, 0.9), (1.7, -0.4))]
    field = []
    for x in cov.grid(6):
        p = mishchenko_idempotent(cov, x)
        field.append(build_Pdoubleprime(p.push(chars[0]), p.push(chars[1])))
    rep = rank_field(field, shape=(6, 6))
    assert rep.constant and rep.class_rank == 0
    assert rep.to_json()["jumps"] == []


def test_rank_field_reports_jumps():
    lo = AlmostProjection.from_matrix(np.diag([1.0, 0, 0, 0]))
    hi = AlmostProjection.from_matrix(np.diag([1.0, 1, 0, 0]))
    rep = rank_field([lo, lo, hi, hi], shape=(4,), periodic=False)
    assert not rep.constant and rep.jumps == [(1, 2)]
    rep = rank_field([lo, lo, hi, hi], shape=(4,))
    assert sorted(rep.jumps) == [(1, 2), (3, 0)]


def test_chern_constant_field_is_zero():
    P = np.diag([1.0, 0.0])
    assert chern_number([[P] * 5 for _ in range(5)]) == 0


@pytest.mark.parametrize("n", [32, 20])
def test_two_band_chern(n):
    # sign fixed by the plaquette orientation documented in kclass
    assert chern_number(two_band_field(n, 1.0)) == -1
    assert chern_number(two_band_field(n, -1.0)) == 1
    assert chern_number(two_band_field(n, 3.0)) == 0


def test_chern_gauge_invariance(rng):
    n = 24
    ks = 2 * np.pi * np.arange(n) / n
    H1, H2 = random_selfadjoint(2, rng), random_selfadjoint(2, rng)

    def gauge(a, b):
        w, V = np.linalg.eigh(np.cos(a) * H1 + np.sin(b) * H2)
        return (V * np.exp(1j * w)) @ V.conj().T

    field = [[gauge(a, b) @ two_band(a, b, 1.0) @ gauge(a, b).conj().T for b in ks] for a in ks]
    assert chern_number(field) == chern_number(two_band_field(n, 1.0))


def test_chern_embedding_in_larger_space():
    n = 16
    field = two_band_field(n, -1.0)
    extra = np.diag([1.0, 0.0])
    big = [[np.block([[P, np.zeros((2, 2))], [np.zeros((2, 2)), extra]]) for P in row]
           for row in field]
    c, det = chern_number(big, return_details=True)
    assert c == 1 and det["max_phase"] < np.pi


def test_chern_phase_overflow():
    with pytest.raises(GapClosedError):
        chern_number(two_band_field(3, 1.0), max_phase=0.1)


def test_reduced_link_matches_dense(rng):
    m = 6
    Q = np.diag([1.0] * m + [0.0] * m)

    def perturbed(coords):
        H = np.zeros((2 * m, 2 * m), dtype=complex)
        X = random_selfadjoint(len(coords), rng, 0.2)
        H[np.ix_(coords, coords)] = X
        P = Q + H
        block = P[np.ix_(coords, coords)]
        return P, ReducedFrame.from_block(np.array(coords), block, m)

    P1, F1 = perturbed([1, 4, 7, 9])
    P2, F2 = perturbed([0, 4, 6, 10, 11])

    def frame(P):
        w, V = np.linalg.eigh(P)
        return V[:, w > 0.5]

    V1, V2 = frame(P1), frame(P2)
    d = np.linalg.det(V1.conj().T @ V2)
    # both dense frames are arbitrary bases; compare gauge-free plaquette products
    P3, F3 = perturbed([2, 4, 8])
    V3 = frame(P3)
    dense = (np.linalg.det(V1.conj().T @ V2) * np.linalg.det(V2.conj().T @ V3)
             * np.linalg.det(V3.conj().T @ V1))
    red = reduced_link(F1, F2) * reduced_link(F2, F3) * reduced_link(F3, F1)
    assert abs(np.angle(dense * np.conj(red))) < 1e-10
    assert F1.class_rank == F2.class_rank == 0
    assert abs(d) > 0
