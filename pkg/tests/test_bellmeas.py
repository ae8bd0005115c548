import math

import numpy as np
import pytest

from dvteleport.bellmeas import (
    ArraySpec,
    BellState,
    array_analyzer,
    bell_ket,
    correction_unitary,
    detector_loss_map,
    four_state_projection,
    splitter_matrix,
    two_state_hbsm,
    two_state_hbsm_inefficient,
)
from dvteleport.fock import (
    DensityOperator,
    KetVector,
    ModeSpace,
    apply_kraus,
    fock_ket,
    partial_trace,
    tensor_product,
)
from dvteleport.states import TmsvParams, lossy_tmsv, tmsv_ket

from conftest import random_density


def qubit_density(theta, phi=0.0):
    amp = np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])
    return KetVector(ModeSpace((2,)), amp.astype(complex)).to_density()


def test_corrections_recover_bell_resource():
    # with a perfect Bell pair as resource, every outcome teleports exactly
    alpha, beta = math.cos(0.6), math.sin(0.6) * np.exp(0.9j)
    rho_in = KetVector(ModeSpace((2,)), np.array([alpha, beta])).to_density()
    bell = bell_ket(BellState.PHI_PLUS).to_density()
    joint = tensor_product(rho_in, bell)
    for state, (prob, cond) in four_state_projection(joint).items():
        assert prob == pytest.approx(0.25, abs=1e-12)
        u = correction_unitary(state, 2)
        fixed = u @ cond.mat @ u.conj().T
        assert np.max(np.abs(fixed - rho_in.mat)) < 1e-12


def test_two_state_on_bell_input():
    joint = bell_ket(BellState.PSI_MINUS).to_density()
    res = two_state_hbsm(joint)
    assert res[BellState.PSI_MINUS].prob == pytest.approx(1.0, abs=1e-12)
    assert res[BellState.PSI_PLUS].prob < 1e-14
    assert res[BellState.PSI_PLUS].conditional is None


def test_two_state_qubit_with_vacuum_resource():
    theta = 0.9
    joint = tensor_product(qubit_density(theta), fock_ket((3, 3), (0, 0)).to_density())
    res = two_state_hbsm(joint)
    expect = math.sin(theta / 2) ** 2 / 2
    for state in (BellState.PSI_PLUS, BellState.PSI_MINUS):
        assert res[state].prob == pytest.approx(expect, abs=1e-12)
        # conditional output is vacuum before correction
        assert np.allclose(res[state].conditional.mat, np.diag([1.0, 0.0, 0.0]))


def test_four_state_needs_truncated_mode():
    joint = tensor_product(qubit_density(1.0), fock_ket((3, 3), (0, 0)).to_density())
    with pytest.raises(ValueError):
        four_state_projection(joint)


def test_four_state_on_product_resource():
    alpha, beta = math.cos(0.4), math.sin(0.4)
    joint = tensor_product(qubit_density(0.8), fock_ket((2, 2), (0, 0)).to_density())
    res = four_state_projection(joint)
    assert res[BellState.PHI_PLUS].prob == pytest.approx(alpha**2 / 2, abs=1e-12)
    assert res[BellState.PHI_MINUS].prob == pytest.approx(alpha**2 / 2, abs=1e-12)
    assert res[BellState.PSI_PLUS].prob == pytest.approx(beta**2 / 2, abs=1e-12)
    assert res[BellState.PSI_MINUS].prob == pytest.approx(beta**2 / 2, abs=1e-12)


def test_four_state_probabilities_complete(rng):
    joint = tensor_product(random_density(rng, (2,)), random_density(rng, (2, 3)))
    res = four_state_projection(joint)
    assert sum(o.prob for o in res.values()) == pytest.approx(1.0, abs=1e-10)


def test_four_state_conditional_on_pure_tmsv():
    # truncated TMSV resource: the Phi+ branch carries alpha|0> + lam beta|1>
    lam = 0.55
    alpha, beta = math.cos(0.7), math.sin(0.7)
    ket = tmsv_ket(lam, 2)
    resource = ket.normalized().to_density()
    joint = tensor_product(qubit_density(1.4), resource)
    _, cond = four_state_projection(joint)[BellState.PHI_PLUS]
    target = np.array([alpha, lam * beta], dtype=complex)
    target /= np.linalg.norm(target)
    assert np.max(np.abs(cond.mat - np.outer(target, target.conj()))) < 1e-12


def test_detector_loss_map_limits():
    assert np.allclose(detector_loss_map(1.0, 3)[0], np.eye(3))
    rho = fock_ket((2,), (1,)).to_density()
    dead = apply_kraus(rho, detector_loss_map(0.0, 2), 0)
    assert np.allclose(dead.mat, np.diag([1.0, 0.0]))
    half = apply_kraus(rho, detector_loss_map(0.5, 2), 0)
    assert np.allclose(half.mat, np.diag([0.5, 0.5]))


def test_inefficient_two_state_reduces_at_unit_efficiency(rng):
    joint = tensor_product(random_density(rng, (2,)), random_density(rng, (3, 3)))
    ideal = two_state_hbsm(joint)
    lossy = two_state_hbsm_inefficient(joint, 1.0)
    for state in ideal:
        assert lossy[state].prob == pytest.approx(ideal[state].prob, abs=1e-12)
        assert np.max(np.abs(lossy[state].conditional.mat - ideal[state].conditional.mat)) < 1e-12


def test_inefficient_two_state_single_photon_survival():
    # |1> input with vacuum resource: the single photon registers with prob eta
    for eta in (0.3, 0.7, 1.0):
        joint = tensor_product(qubit_density(math.pi), fock_ket((2, 2), (0, 0)).to_density())
        res = two_state_hbsm_inefficient(joint, eta)
        p_bsm = sum(o.prob for o in res.values())
        assert p_bsm == pytest.approx(eta, abs=1e-12)


@pytest.mark.parametrize("lam,t", [(0.4, 1.0), (0.6, 0.6), (0.8, 0.4)])
def test_inefficient_two_state_monotone(rng, lam, t):
    # on resource-like joints; arbitrary multi-photon states can gain
    # Bell-subspace weight from the detector loss and break monotonicity
    resource = lossy_tmsv(TmsvParams(r=math.atanh(lam), t1=t, t2=t, dim=6))
    joint = tensor_product(qubit_density(1.9, 0.4), resource)
    probs = [
        sum(o.prob for o in two_state_hbsm_inefficient(joint, eta).values())
        for eta in (1.0, 0.8, 0.6, 0.4, 0.2)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(probs, probs[1:]))


# ---------------------------------------------------------------------------
# beam-splitter-array analyzer
# ---------------------------------------------------------------------------


def test_splitter_matrix_orthogonal():
    for n in (1, 2, 3):
        s = splitter_matrix(n)
        assert np.max(np.abs(s @ s.T - np.eye(2**n))) < 1e-12
        assert np.max(np.abs(np.kron(splitter_matrix(1), splitter_matrix(n)) - splitter_matrix(n + 1))) < 1e-12


def test_array_spec_validation():
    with pytest.raises(ValueError):
        ArraySpec(1)
    with pytest.raises(ValueError):
        ArraySpec(4)
    ArraySpec(4, allow_large=True)


def test_ancilla_ket_structure():
    xi = ArraySpec(3).ancilla_ket()
    assert xi.space.dims == (2,) * 6
    amp = xi.amp.reshape((2,) * 6)
    # product of pair states: support only on (00|11) x (0000|1111)
    assert amp[0, 0, 0, 0, 0, 0] == pytest.approx(0.5)
    assert amp[1, 1, 1, 1, 1, 1] == pytest.approx(0.5)
    assert amp[0, 0, 1, 1, 1, 1] == pytest.approx(0.5)
    assert amp[1, 1, 0, 0, 0, 0] == pytest.approx(0.5)
    assert xi.norm == pytest.approx(1.0, abs=1e-12)


def test_array_vacuum_and_bell_inputs():
    spec = ArraySpec(2)
    rep = array_analyzer(spec, fock_ket((2, 2), (0, 0)).to_density())
    assert rep.p_bsm == pytest.approx(0.5, abs=1e-12)
    assert rep.p_bsm_closed == pytest.approx(0.5, abs=1e-12)
    # psi+- carry no |00>/|11> weight and are always discriminated; phi+-
    # have P_id = 1 and keep the finite-order penalty 1 - 2^(1-N)
    for state in (BellState.PSI_PLUS, BellState.PSI_MINUS):
        rep = array_analyzer(spec, bell_ket(state).to_density())
        assert rep.p_bsm == pytest.approx(1.0, abs=1e-12)
        assert rep.group_probs[state.value] == pytest.approx(1.0, abs=1e-12)
    for state in (BellState.PHI_PLUS, BellState.PHI_MINUS):
        rep = array_analyzer(spec, bell_ket(state).to_density())
        assert rep.p_bsm == pytest.approx(0.5, abs=1e-12)
        assert rep.group_probs[state.value] == pytest.approx(0.5, abs=1e-12)
        assert rep.p_id == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_array_matches_closed_forms_on_random_states(rng, n):
    spec = ArraySpec(n)
    for _ in range(10):
        rho = random_density(rng, (2, 2))
        rep = array_analyzer(spec, rho)
        for group in rep.group_probs:
            assert rep.group_probs[group] == pytest.approx(
                rep.closed_form[group], abs=1e-10
            )
        assert sum(rep.group_probs.values()) == pytest.approx(1.0, abs=1e-10)
        assert rep.p_bsm == pytest.approx(rep.p_bsm_closed, abs=1e-10)


def test_array_failure_gap_halves_with_order(rng):
    rho = random_density(rng, (2, 2))
    gap2 = 1.0 - array_analyzer(ArraySpec(2), rho).p_bsm
    gap3 = 1.0 - array_analyzer(ArraySpec(3), rho).p_bsm
    assert gap2 == pytest.approx(2.0 * gap3, abs=1e-10)


# ---------------------------------------------------------------------------
# detector-level enumeration of the two-mode (psi+/psi- only) analyzer
# ---------------------------------------------------------------------------


def two_mode_click_probs(rho12: DensityOperator) -> dict:
    """Probability of every (n1, n2) photon-count pattern after mixing the
    qubit and resource modes at the elementary 50:50 splitter."""
    d1, d2 = rho12.space.dims
    s = splitter_matrix(1)
    probs = {}
    for n1 in range(d1 + d2 - 1):
        for n2 in range(d1 + d2 - 1 - n1):
            # expand b1^+^n1 b2^+^n2 |00> in the input modes
            poly = {(0, 0): 1.0}
            for i, reps in ((0, n1), (1, n2)):
                for _ in range(reps):
                    new = {}
                    for (k1, k2), c in poly.items():
                        for j, step in ((0, (1, 0)), (1, (0, 1))):
                            key = (k1 + step[0], k2 + step[1])
                            new[key] = new.get(key, 0.0) + c * s[i, j]
                    poly = new
            zeta = np.zeros((d1, d2))
            for (k1, k2), c in poly.items():
                if k1 < d1 and k2 < d2:
                    zeta[k1, k2] = c * math.sqrt(math.factorial(k1) * math.factorial(k2))
            z = zeta.reshape(-1) / math.sqrt(math.factorial(n1) * math.factorial(n2))
            probs[(n1, n2)] = float(np.real(z @ rho12.mat @ z))
    return probs


def test_two_state_matches_detector_enumeration(rng):
    for _ in range(10):
        lam = rng.uniform(0.2, 0.8)
        t = rng.uniform(0.3, 1.0)
        resource = lossy_tmsv(TmsvParams(r=math.atanh(lam), t1=t, t2=t, dim=5))
        joint = tensor_product(random_density(rng, (2,)), resource)
        res = two_state_hbsm(joint)
        clicks = two_mode_click_probs(partial_trace(joint, [0, 1]))
        assert clicks[(1, 0)] == pytest.approx(res[BellState.PSI_PLUS].prob, abs=1e-10)
        assert clicks[(0, 1)] == pytest.approx(res[BellState.PSI_MINUS].prob, abs=1e-10)
        # the pattern family is complete
        assert sum(clicks.values()) == pytest.approx(1.0, abs=1e-10)
