import numpy as np
import pytest

from gmemoments.gme import Bipartition, apply_gme_map, build_gme_map
from gmemoments.maps import PAULI, compose_unitary_after, reduction_map, transposition_map
from gmemoments.moments import (INCONCLUSIVE, NPT_DETECTED, SATISFIED, VIOLATED, MomentVector,
                                compute_moments, hankel_det, hankel_matrix, hankel_report,
                                hankel_tolerance, p3_ppt_check, pt_moments)
from gmemoments.qcore import SystemShape
from gmemoments.states import (bell_phi_plus, ghz, maximally_mixed, product_state,
                               random_density, random_pure, w3, werner_2qubit)

T = transposition_map(2)
MODIFIED = compose_unitary_after(T, PAULI["x"])


def test_moments_of_uniform_output():
    g = build_gme_map(3, T)
    m = compute_moments(g, maximally_mixed(SystemShape.qubits(3)))
    expected = [8 * (11 / 8) ** n for n in range(1, 8)]
    assert np.allclose(m.values, expected, rtol=1e-13)
    assert m.s(1) == pytest.approx(11)


@pytest.mark.parametrize("seed", range(5))
def test_moments_match_matrix_powers(seed):
    g = build_gme_map(3, MODIFIED)
    rho = random_density(SystemShape.qubits(3), seed)
    m = compute_moments(g, rho, n_max=4)
    out = apply_gme_map(g, rho).matrix
    for n in range(1, 5):
        assert m.s(n) == pytest.approx(np.trace(np.linalg.matrix_power(out, n)).real, rel=1e-12)
    assert m.s(2) >= 0


def test_negative_even_moment_rejected():
    with pytest.raises(ValueError, match="even moment"):
        MomentVector((1.0, -1.0, 0.0))


def test_hankel_shapes():
    vals = tuple(float(k) for k in range(1, 8))
    assert np.array_equal(hankel_matrix(vals, 1), [[1, 2], [2, 3]])
    h2 = hankel_matrix(vals, 2)
    assert np.array_equal(h2[0], [1, 2, 3]) and np.array_equal(h2[2], [3, 4, 5])
    with pytest.raises(ValueError, match="n_max >= 5"):
        hankel_matrix(vals[:3], 2)


def test_constant_spectrum_hankel():
    assert np.array_equal(hankel_matrix([8.0] * 3, 1), [[8, 8], [8, 8]])
    assert hankel_det([8.0] * 3, 1) == pytest.approx(0.0, abs=1e-12)


def test_hankel_det_matches_numpy():
    vals = (11.0, 19.0, 35.5, 70.0, 150.0, 330.0, 760.0)
    for l in (1, 2, 3):
        assert hankel_det(vals, l) == pytest.approx(np.linalg.det(hankel_matrix(vals, l)), rel=1e-9)


def test_ghz_modified_first_hankel_negative():
    rep = hankel_report(compute_moments(build_gme_map(3, MODIFIED), ghz(3)))
    assert rep.determinants[0] < 0
    assert rep.per_order_verdict[0] == VIOLATED
    assert rep.detected and rep.overall == "GME-detected"


def test_w3_second_hankel():
    rep = hankel_report(compute_moments(build_gme_map(3, T), w3()))
    assert rep.determinants[0] >= 0 and rep.determinants[1] < 0
    assert rep.per_order_verdict[:2] == (SATISFIED, VIOLATED)


def test_ghz4_second_hankel():
    rep = hankel_report(compute_moments(build_gme_map(4, MODIFIED), ghz(4)), 2)
    assert rep.determinants[0] > 0 and rep.determinants[1] < 0


def test_product_state_satisfied():
    rho = product_state(random_pure(SystemShape.qubits(1), 1), random_density(SystemShape.qubits(2), 2))
    for base in (T, MODIFIED, reduction_map(2)):
        rep = hankel_report(compute_moments(build_gme_map(3, base), rho))
        assert not rep.detected


def test_tolerance_scales():
    vals = (2.0, 3.0, 5.0, 7.0, 11.0)
    assert hankel_tolerance(vals, 1) == pytest.approx(1e-12 * 2 * 5)
    assert hankel_tolerance(vals, 2) == pytest.approx(1e-12 * 2 * 5 * 11)
    scaled = MomentVector(vals).scaled(0.5)
    assert hankel_tolerance(scaled, 2) == pytest.approx(0.5 ** 9 * hankel_tolerance(vals, 2))
    rep = hankel_report(compute_moments(build_gme_map(3, T), w3()), tol=1e3)
    assert rep.tol == (1e3, 1e3, 1e3)


def test_report_needs_enough_moments():
    m = compute_moments(build_gme_map(3, T), w3(), n_max=5)
    with pytest.raises(ValueError, match="n_max >= 7"):
        hankel_report(m, 3)


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_scaled_moments_keep_verdicts(alpha):
    for seed in range(5):
        m = compute_moments(build_gme_map(3, MODIFIED), random_pure(SystemShape.qubits(3), seed))
        a, b = hankel_report(m), hankel_report(m.scaled(alpha))
        assert a.per_order_verdict == b.per_order_verdict


def test_pt_moments_basic():
    assert pt_moments(random_density(SystemShape.qubits(2), 0), Bipartition((0,), 2)).p(1) == pytest.approx(1)
    prod_pure = product_state(random_pure(SystemShape.qubits(1), 1), random_pure(SystemShape.qubits(1), 2))
    assert np.allclose(pt_moments(prod_pure, [0]).values, 1.0)
    bell = pt_moments(bell_phi_plus(), [0])
    assert bell.p(2) == pytest.approx(1.0) and bell.p(3) == pytest.approx(0.25)


def test_p3_ppt_examples():
    assert p3_ppt_check(pt_moments(bell_phi_plus(), [0])) == NPT_DETECTED
    assert p3_ppt_check(pt_moments(maximally_mixed(SystemShape.qubits(2)), [0])) == INCONCLUSIVE
    assert p3_ppt_check(pt_moments(werner_2qubit(0.5), [0])) == NPT_DETECTED
    assert p3_ppt_check(pt_moments(werner_2qubit(0.2), [0])) == INCONCLUSIVE
