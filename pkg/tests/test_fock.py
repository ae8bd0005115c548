import math

import numpy as np
import pytest

from dvteleport.fock import (
    CapacityError,
    DensityOperator,
    KetVector,
    ModeSpace,
    annihilation,
    apply_kraus,
    displacement_block,
    displacement_operator,
    fidelity_pure,
    fock_ket,
    partial_trace,
    project,
    tensor_product,
    vacuum_ket,
)
from dvteleport.states import loss_channel
from dvteleport.bellmeas import BellState, bell_ket

from conftest import random_density


def test_mode_space_basics():
    sp = ModeSpace((2, 3, 4))
    assert sp.total_dim == 24
    assert sp.keep([2, 0]).dims == (2, 4)
    assert sp.drop([1]).dims == (2, 4)
    with pytest.raises(ValueError):
        ModeSpace((2, 0))


def test_density_operator_rejects_non_hermitian():
    mat = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
    with pytest.raises(ValueError, match="Hermitian"):
        DensityOperator(ModeSpace((2,)), mat)


def test_density_operator_rejects_bad_trace():
    with pytest.raises(ValueError, match="trace"):
        DensityOperator(ModeSpace((2,)), np.eye(2, dtype=complex))


def test_density_operator_immutable():
    rho = fock_ket((2,), (0,)).to_density()
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 2.0


def test_renormalized_records_mass():
    mat = 0.25 * np.eye(2, dtype=complex)
    rho = DensityOperator(ModeSpace((2,)), mat).renormalized()
    assert rho.trace == pytest.approx(1.0, abs=1e-14)
    assert rho.trace_mass == pytest.approx(0.5, abs=1e-14)


def test_tensor_product_basis_case():
    a = fock_ket((2,), (0,)).to_density()
    b = fock_ket((2,), (1,)).to_density()
    ab = tensor_product(a, b)
    expect = fock_ket((2, 2), (0, 1)).to_density()
    assert np.allclose(ab.mat, expect.mat)


def test_tensor_product_trace_multiplicative():
    a = DensityOperator(ModeSpace((2,)), 0.5 * np.diag([0.6, 0.4]).astype(complex))
    b = DensityOperator(ModeSpace((3,)), 0.4 * np.diag([0.5, 0.25, 0.25]).astype(complex))
    ab = tensor_product(a, b)
    assert ab.trace == pytest.approx(0.2, abs=1e-12)


def test_tensor_product_capacity_cap():
    big = DensityOperator(ModeSpace((70,)), np.eye(70, dtype=complex) / 70)
    with pytest.raises(CapacityError):
        tensor_product(big, big)


def test_partial_trace_inverts_tensor(rng):
    a = random_density(rng, (3,))
    b = random_density(rng, (4,))
    ab = tensor_product(a, b)
    back = partial_trace(ab, [0])
    assert np.max(np.abs(back.mat - a.mat)) < 1e-12
    back2 = partial_trace(ab, [1])
    assert np.max(np.abs(back2.mat - b.mat)) < 1e-12


def test_partial_trace_bell_marginal():
    rho = bell_ket(BellState.PSI_PLUS).to_density()
    marg = partial_trace(rho, [0])
    assert np.allclose(marg.mat, 0.5 * np.eye(2))


def test_partial_trace_preserves_trace_and_hermiticity(rng):
    rho = random_density(rng, (2, 3, 2))
    red = partial_trace(rho, [0, 2])
    assert red.trace == pytest.approx(rho.trace, abs=1e-12)
    assert np.max(np.abs(red.mat - red.mat.conj().T)) < 1e-12


def test_apply_kraus_identity():
    rho = fock_ket((3, 2), (1, 0)).to_density()
    out = apply_kraus(rho, [np.eye(3, dtype=complex)], 0)
    assert np.allclose(out.mat, rho.mat)


def test_apply_kraus_loss_on_one_photon():
    # transmissivity 0.6 on |1><1| -> 0.6 |1><1| + 0.4 |0><0|
    rho = fock_ket((2,), (1,)).to_density()
    out = apply_kraus(rho, loss_channel(0.6, 2), 0)
    assert np.allclose(out.mat, np.diag([0.4, 0.6]))


def test_apply_kraus_shape_mismatch():
    rho = fock_ket((3,), (0,)).to_density()
    with pytest.raises(ValueError):
        apply_kraus(rho, [np.eye(2, dtype=complex)], 0)


def test_apply_kraus_embedded_mode(rng):
    # channel on the middle mode of three; trace preserved
    rho = random_density(rng, (2, 3, 2))
    out = apply_kraus(rho, loss_channel(0.3, 3), 1)
    assert out.trace == pytest.approx(rho.trace, abs=1e-10)
    assert np.max(np.abs(out.mat - out.mat.conj().T)) < 1e-10


def test_project_certain_outcome():
    joint = tensor_product(
        bell_ket(BellState.PSI_MINUS).to_density(), fock_ket((2,), (0,)).to_density()
    )
    prob, cond = project(joint, bell_ket(BellState.PSI_MINUS), (0, 1))
    assert prob == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(cond.mat, np.diag([1.0, 0.0]))


def test_project_qubit_vacuum_resource():
    # input qubit with vacuum modes: <Psi+| picks sin^2(theta/2)/2
    theta = 1.1
    amp = np.zeros(2, dtype=complex)
    amp[0], amp[1] = math.cos(theta / 2), math.sin(theta / 2)
    rho_in = KetVector(ModeSpace((2,)), amp).to_density()
    joint = tensor_product(rho_in, fock_ket((2, 2), (0, 0)).to_density())
    prob, _ = project(joint, bell_ket(BellState.PSI_PLUS), (0, 1))
    assert prob == pytest.approx(math.sin(theta / 2) ** 2 / 2, abs=1e-12)


def test_project_orthogonal_is_null():
    joint = bell_ket(BellState.PSI_MINUS).to_density()
    prob, cond = project(joint, bell_ket(BellState.PSI_PLUS), (0, 1))
    assert prob < 1e-14
    assert cond is None


def test_project_all_modes_leaves_trivial_state():
    rho = bell_ket(BellState.PHI_PLUS).to_density()
    prob, cond = project(rho, bell_ket(BellState.PHI_PLUS), (0, 1))
    assert prob == pytest.approx(1.0, abs=1e-12)
    assert cond.space.dims == ()
    assert cond.mat.shape == (1, 1)


def test_project_complete_basis_matches_partial_trace(rng):
    # summing <e_k| rho |e_k> over an orthonormal basis of mode 0 equals the
    # reduced state on the remaining mode
    rho = random_density(rng, (3, 4))
    acc = np.zeros((4, 4), dtype=complex)
    for k in range(3):
        amp = np.zeros(3, dtype=complex)
        amp[k] = 1.0
        prob, cond = project(rho, KetVector(ModeSpace((3,)), amp), (0,))
        if cond is not None:
            acc += prob * cond.mat
    red = partial_trace(rho, [1])
    assert np.max(np.abs(acc - red.mat)) < 1e-10


def test_displacement_zero_is_identity():
    d = displacement_operator(0.0, 4)
    assert np.allclose(d, np.eye(4))


@pytest.mark.parametrize("xi", [0.3, 1.0 - 0.7j, -2.1 + 0.4j])
def test_displacement_matrix_elements(xi):
    # <0|D|0> = exp(-|xi|^2/2), <1|D|1> = (1-|xi|^2) exp(-|xi|^2/2)
    d = displacement_operator(xi, 2)
    env = math.exp(-abs(xi) ** 2 / 2)
    assert d[0, 0] == pytest.approx(env, abs=1e-8)
    assert d[1, 1] == pytest.approx((1 - abs(xi) ** 2) * env, abs=1e-8)


@pytest.mark.parametrize("xi", [0.5, 1.5j, 2.0 - 1.0j, -0.3 + 2.4j])
def test_displacement_unitary_in_pad(xi):
    pad = 6 + math.ceil(8 * abs(xi))
    a = annihilation(pad)
    from scipy.linalg import expm

    d = expm(xi * a.conj().T - np.conj(xi) * a)
    assert np.max(np.abs(d.conj().T @ d - np.eye(pad))) < 1e-8
    # D(xi) D(-xi) = I on the padded space
    dm = expm(-xi * a.conj().T + np.conj(xi) * a)
    assert np.max(np.abs(d @ dm - np.eye(pad))) < 1e-7


@pytest.mark.parametrize("xi", [0.2, 0.9 + 0.4j, -1.6 + 1.1j, 2.5j])
def test_displacement_block_matches_padded_exponential(xi):
    dim = 6
    block = displacement_block(xi, dim)
    cropped = displacement_operator(xi, dim)
    assert np.max(np.abs(block - cropped)) < 1e-8


def test_displacement_block_vectorized(rng):
    xis = rng.normal(size=5) + 1j * rng.normal(size=5)
    blocks = displacement_block(xis, 3)
    assert blocks.shape == (5, 3, 3)
    for k, xi in enumerate(xis):
        assert np.allclose(blocks[k], displacement_block(xi, 3))


def test_fidelity_pure_basics():
    zero = fock_ket((2,), (0,))
    one = fock_ket((2,), (1,))
    rho0 = zero.to_density()
    assert fidelity_pure(zero, rho0) == pytest.approx(1.0)
    assert fidelity_pure(one, rho0) == pytest.approx(0.0)
    mixed = DensityOperator(ModeSpace((2,)), 0.5 * np.eye(2, dtype=complex))
    amp = np.array([math.cos(0.4), math.sin(0.4)], dtype=complex)
    assert fidelity_pure(KetVector(ModeSpace((2,)), amp), mixed) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fidelity_pure(vacuum_ket((3,)), rho0)


def test_loss_channel_trace_nonincreasing_and_hermitian(rng):
    rho = random_density(rng, (5,))
    for t in (0.2, 0.5, 0.9, 1.0):
        out = apply_kraus(rho, loss_channel(t, 5), 0)
        assert out.trace <= rho.trace + 1e-10
        assert np.max(np.abs(out.mat - out.mat.conj().T)) < 1e-10
        out.validate()
