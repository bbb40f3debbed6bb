import numpy as np
import pytest

from gmemoments.maps import (PAULI, SingleSiteMap, apply_on_sites, choi, compose_unitary_after,
                             from_lindblad, identity_map, is_completely_positive, matrix_unit,
                             reduction_map, superoperator_from, transposition_map)
from gmemoments.qcore import DensityOperator, SystemShape, partial_trace
from gmemoments.states import bell_phi_plus, random_density


def test_transposition_qubit_entries():
    x = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.array_equal(transposition_map(2)(x), [[1, 3], [2, 4]])
    assert np.allclose(transposition_map(2)(np.eye(2)), np.eye(2))


def test_transposition_qutrit_unit():
    assert np.array_equal(transposition_map(3)(matrix_unit(3, 0, 1)), matrix_unit(3, 1, 0))


@pytest.mark.parametrize("d, x, expected", [
    (2, np.eye(2) / 2, np.eye(2) / 2),
    (2, np.diag([1, 0]), np.diag([0, 1])),
    (3, np.eye(3), 2 * np.eye(3)),
])
def test_reduction_map(d, x, expected):
    assert np.allclose(reduction_map(d)(x), expected)


@pytest.mark.parametrize("gammas, ref", [
    ((0.5, -0.5, 0.5), transposition_map(2)),
    ((0.5, 0.5, 0.5), reduction_map(2)),
    ((0.0, 0.0, 0.0), identity_map(2)),
])
def test_lindblad_generates_known_maps(gammas, ref):
    m = from_lindblad(gammas)
    assert np.max(np.abs(m.superoperator - ref.superoperator)) < 1e-12
    assert m.kind == ref.kind


def test_lindblad_rejects_wrong_length():
    with pytest.raises(ValueError):
        from_lindblad((1.0, 2.0))


def test_lindblad_generic_is_custom_and_trace_preserving():
    m = from_lindblad((0.1, 0.2, 0.3))
    assert m.kind == "custom"
    assert m.trace_preserving


def test_compose_identity_unitary():
    t = transposition_map(2)
    assert compose_unitary_after(t, np.eye(2)).equals(t)


def test_modified_transposition_flips_projector():
    m = compose_unitary_after(transposition_map(2), PAULI["x"])
    assert np.allclose(m(np.diag([1, 0])), np.diag([0, 1]))
    assert m.kind == "transposition"
    assert np.allclose(choi(m).matrix, choi(m).matrix.conj().T)


def test_qubit_reduction_is_sigma_y_after_transposition():
    m = compose_unitary_after(transposition_map(2), PAULI["y"])
    assert m.equals(reduction_map(2))


def test_compose_rejects_non_unitary():
    with pytest.raises(ValueError, match="unitary"):
        compose_unitary_after(transposition_map(2), np.diag([1, 2]))


def test_non_hermiticity_preserving_map_rejected():
    s = superoperator_from(lambda x: 1j * x, 2)
    with pytest.raises(ValueError, match="Hermiticity"):
        SingleSiteMap(2, s, "bad")


def test_partial_transpose_bell_min_eig():
    out = apply_on_sites(transposition_map(2), [0], bell_phi_plus())
    assert np.linalg.eigvalsh(out.matrix)[0] == pytest.approx(-0.5)


@pytest.mark.parametrize("seed", range(5))
def test_reduction_criterion_form(seed):
    rho = random_density(SystemShape.qubits(2), seed)
    out = apply_on_sites(reduction_map(2), [1], rho)
    rho_a = partial_trace(rho, [0]).matrix
    assert np.allclose(out.matrix, np.kron(rho_a, np.eye(2)) - rho.matrix)


def test_empty_site_set_is_identity():
    rho = random_density(SystemShape.qubits(2), 9)
    assert np.allclose(apply_on_sites(reduction_map(2), [], rho).matrix, rho.matrix)


def test_apply_rejects_dimension_mismatch():
    rho = random_density(SystemShape((2, 3)), 0)
    with pytest.raises(ValueError, match="dimension"):
        apply_on_sites(transposition_map(2), [1], rho)


@pytest.mark.parametrize("sites", [(0,), (1,), (2,), (0, 2)])
def test_partial_transpose_matches_index_swap(sites):
    rho = random_density(SystemShape.qubits(3), 11)
    t = rho.matrix.reshape((2,) * 6)
    for s in sites:
        t = np.swapaxes(t, s, 3 + s)
    out = apply_on_sites(transposition_map(2), sites, rho)
    assert np.allclose(out.matrix, t.reshape(8, 8))


def test_choi_values():
    assert np.allclose(choi(identity_map(2)).matrix, bell_phi_plus().matrix)
    lam = np.linalg.eigvalsh(choi(transposition_map(2)).matrix)
    assert np.allclose(lam, [-0.5, 0.5, 0.5, 0.5])
    assert not is_completely_positive(transposition_map(2))
    assert not is_completely_positive(reduction_map(2))
    assert is_completely_positive(identity_map(3))


@pytest.mark.parametrize("factory", [transposition_map, reduction_map])
def test_positive_on_random_states(factory):
    m = factory(2)
    for seed in range(10):
        rho = random_density(SystemShape.qubits(1), seed)
        assert np.linalg.eigvalsh(m(rho.matrix))[0] >= -1e-12


def test_trace_preservation_flags():
    assert transposition_map(2).trace_preserving
    assert not reduction_map(3).trace_preserving
    assert reduction_map(2).trace_preserving


def test_density_operator_survives_partial_transpose_of_product():
    rho = DensityOperator(SystemShape.qubits(2), np.kron(np.diag([1, 0]), np.eye(2) / 2))
    out = apply_on_sites(transposition_map(2), [0], rho)
    assert np.allclose(out.matrix, rho.matrix)
