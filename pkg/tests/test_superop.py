import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from lepkit.errors import ConventionError, DimensionError
from lepkit.superop import (
    COL,
    ROW,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    LindbladModel,
    Superoperator,
    check_density_matrix,
    devectorize,
    dissipator_super,
    effective_hamiltonian,
    is_density_matrix,
    liouvillian_matrix,
    propagator,
    random_density_matrix,
    random_liouvillian_model,
    sandwich_super,
    vectorize,
)


def lindblad_rhs(model, rho):
    """Master equation right-hand side written out with plain matrix products."""
    H = model.hamiltonian
    out = -1j * (H @ rho - rho @ H)
    for rate, G in model.jumps:
        GdG = G.conj().T @ G
        out = out + rate * (G @ rho @ G.conj().T - 0.5 * (GdG @ rho + rho @ GdG))
    return out


def test_vectorize_row_major_by_hand():
    M = np.array([[1, 2], [3, 4]])
    assert np.abs(vectorize(M) - [1, 2, 3, 4]).max() < 1e-15
    assert np.abs(vectorize(M, COL) - [1, 3, 2, 4]).max() < 1e-15
    assert np.abs(devectorize(vectorize(M, COL), COL) - M).max() < 1e-15


def test_devectorize_rejects_non_square_length():
    with pytest.raises(DimensionError):
        devectorize(np.ones(3))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([ROW, COL]))
def test_sandwich_matches_matrix_product(seed, conv):
    rng = np.random.default_rng(seed)
    A, B, X = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
    S = sandwich_super(A, B, conv)
    assert np.abs(S.apply(X) - A @ X @ B).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_liouvillian_matches_master_equation(seed, d):
    rng = np.random.default_rng(seed)
    model = random_liouvillian_model(d, rng)
    rho = random_density_matrix(d, rng)
    expected = lindblad_rhs(model, rho)
    for conv in (ROW, COL):
        for form in ("standard", "effective"):
            L = liouvillian_matrix(model, conv, form)
            assert np.abs(L.apply(rho) - expected).max() < 1e-12


def test_liouvillian_forms_agree_on_driven_qubit():
    model = LindbladModel(0.5 * SIGMA_Z, ((0.3, SIGMA_X), (2.0, SIGMA_Y)))
    a = liouvillian_matrix(model, form="standard").matrix
    b = liouvillian_matrix(model, form="effective").matrix
    assert np.abs(a - b).max() < 1e-12


def test_effective_hamiltonian_by_hand():
    model = LindbladModel(0.5 * SIGMA_Z, ((2.0, SIGMA_Y),))
    # H - (i/2) * 2 * sy^dag sy = diag(1/2, -1/2) - i
    expected = np.diag([0.5 - 1j, -0.5 - 1j])
    assert np.abs(effective_hamiltonian(model) - expected).max() < 1e-15


def test_trace_is_annihilated():
    rng = np.random.default_rng(3)
    L = liouvillian_matrix(random_liouvillian_model(3, rng))
    assert L.trace_functional_defect() < 1e-12


def test_dissipator_of_lowering_operator_by_hand():
    sm = np.array([[0, 0], [1, 0]], dtype=complex)
    D = dissipator_super(sm, 1.0)
    rho = np.array([[0.7, 0.2 + 0.1j], [0.2 - 0.1j, 0.3]])
    # excited population 0.7 flows to the ground state, coherences decay at 1/2
    expected = np.array([[-0.7, -0.5 * (0.2 + 0.1j)], [-0.5 * (0.2 - 0.1j), 0.7]])
    assert np.abs(D.apply(rho) - expected).max() < 1e-15


def test_convention_mixing_is_refused():
    a = Superoperator(np.eye(4), ROW)
    b = Superoperator(np.eye(4), COL)
    with pytest.raises(ConventionError):
        a @ b
    with pytest.raises(ConventionError):
        a + b


def test_conversion_between_conventions_preserves_the_map():
    rng = np.random.default_rng(8)
    L = liouvillian_matrix(random_liouvillian_model(2, rng))
    rho = random_density_matrix(2, rng)
    Lc = L.to_convention(COL)
    assert Lc.convention == COL
    assert np.abs(Lc.apply(rho) - L.apply(rho)).max() < 1e-13
    assert np.abs(Lc.to_convention(ROW).matrix - L.matrix).max() < 1e-15


def test_exact_propagator_of_pure_hamiltonian_is_unitary_conjugation():
    H = 0.5 * SIGMA_Z + 0.3 * SIGMA_X
    L = liouvillian_matrix(LindbladModel(H, ()))
    t = 0.7
    U = scipy.linalg.expm(-1j * H * t)
    rho = np.array([[0.6, 0.1j], [-0.1j, 0.4]])
    S = propagator(L, t, "exact")
    assert np.abs(S.apply(rho) - U @ rho @ U.conj().T).max() < 1e-13


def test_first_order_propagator_is_identity_plus_step():
    rng = np.random.default_rng(1)
    L = liouvillian_matrix(random_liouvillian_model(2, rng))
    S = propagator(L, 0.01)
    assert np.abs(S.matrix - (np.eye(4) + 0.01 * L.matrix)).max() < 1e-15


def test_propagator_rejects_bad_step_and_mode():
    L = Superoperator(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        propagator(L, -1.0)
    with pytest.raises(ValueError):
        propagator(L, 0.1, "rk4")


def test_density_matrix_checks():
    assert is_density_matrix(np.diag([0.5, 0.5]))
    assert not is_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        check_density_matrix(np.array([[0.5, 1.0], [0.0, 0.5]]))


def test_model_validation():
    with pytest.raises(ValueError):
        LindbladModel(np.array([[0, 1], [0, 0]]), ())
    with pytest.raises(ValueError):
        LindbladModel(SIGMA_Z, ((-1.0, SIGMA_X),))
    with pytest.raises(DimensionError):
        LindbladModel(SIGMA_Z, ((1.0, np.eye(3)),))
