"""Hybrid Bell-state measurements on a single-photon qubit and one resource mode.

Provides the two-outcome analyzer (psi+/psi- only, one beam-splitter and two
detectors), the idealized four-outcome Bell projection, inefficient-detector
variants, and the 2^N-mode beam-splitter-array analyzer with entangled
ancillas that validates the four-outcome group probabilities by brute-force
outcome enumeration.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .fock import (
    DensityOperator,
    KetVector,
    ModeSpace,
    apply_kraus,
    project,
)
from .states import _binomial_loss_kraus


class BellState(Enum):
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"

    @property
    def coeffs(self) -> np.ndarray:
        """2x2 amplitude table beta[a, b] with |B> = sum beta[a,b] |a>|b>."""
        s = 1.0 / math.sqrt(2.0)
        return {
            BellState.PHI_PLUS: np.array([[s, 0], [0, s]]),
            BellState.PHI_MINUS: np.array([[s, 0], [0, -s]]),
            BellState.PSI_PLUS: np.array([[0, s], [s, 0]]),
            BellState.PSI_MINUS: np.array([[0, s], [-s, 0]]),
        }[self]

    @property
    def correction(self) -> np.ndarray:
        """Paired recovery unitary on the output mode (qubit subspace block)."""
        return {
            BellState.PHI_PLUS: np.array([[1.0, 0.0], [0.0, 1.0]]),
            BellState.PHI_MINUS: np.array([[1.0, 0.0], [0.0, -1.0]]),
            BellState.PSI_PLUS: np.array([[0.0, 1.0], [1.0, 0.0]]),
            BellState.PSI_MINUS: np.array([[0.0, 1.0], [-1.0, 0.0]]),
        }[self].astype(complex)


TWO_STATE_OUTCOMES = (BellState.PSI_PLUS, BellState.PSI_MINUS)
FOUR_STATE_OUTCOMES = (
    BellState.PHI_PLUS,
    BellState.PHI_MINUS,
    BellState.PSI_PLUS,
    BellState.PSI_MINUS,
)


class Outcome(NamedTuple):
    prob: float
    conditional: DensityOperator | None


def bell_ket(state: BellState, d_in: int = 2, d_res: int = 2) -> KetVector:
    """Bell ket embedded in a (d_in x d_res) two-mode space via Fock levels 0, 1."""
    if d_in < 2 or d_res < 2:
        raise ValueError("Bell kets need at least two Fock levels per mode")
    amp = np.zeros((d_in, d_res), dtype=complex)
    amp[:2, :2] = state.coeffs
    return KetVector(ModeSpace((d_in, d_res)), amp.reshape(-1))


def correction_unitary(state: BellState, dim: int) -> np.ndarray:
    """Recovery unitary on a dim-level mode: Pauli block on levels 0,1,
    identity above (fidelity only probes the qubit subspace)."""
    u = np.eye(dim, dtype=complex)
    u[:2, :2] = state.correction
    return u


def _measure(joint, outcomes, in_mode, res_mode):
    dims = joint.space.dims
    result = {}
    for state in outcomes:
        bra = bell_ket(state, dims[in_mode], dims[res_mode])
        prob, cond = project(joint, bra, (in_mode, res_mode))
        result[state] = Outcome(prob, cond)
    return result


def two_state_hbsm(
    joint: DensityOperator, in_mode: int = 0, res_mode: int = 1
) -> dict[BellState, Outcome]:
    """Beam-splitter H-BSM discriminating psi+/psi- only.

    Probabilities are the Bell-projector traces; conditionals are renormalized
    states on the remaining modes (None for null outcomes). The measurement is
    incomplete on a multi-photon resource mode: P_BSM = P_psi+ + P_psi- < 1.
    """
    return _measure(joint, TWO_STATE_OUTCOMES, in_mode, res_mode)


def four_state_projection(
    joint: DensityOperator, in_mode: int = 0, res_mode: int = 1
) -> dict[BellState, Outcome]:
    """Idealized full Bell projection; requires the resource mode truncated to
    two levels, where the four projectors form a complete basis."""
    if joint.space.dims[res_mode] != 2:
        raise ValueError(
            "four-outcome projection needs the resource mode truncated to 2 levels"
        )
    return _measure(joint, FOUR_STATE_OUTCOMES, in_mode, res_mode)


def detector_loss_map(eta: float, dim: int) -> list[np.ndarray]:
    """Pure-loss Kraus family with transmissivity eta modeling an inefficient
    detector as a beam-splitter in front of an ideal one. eta = 0 is allowed
    (everything maps to vacuum)."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"detector efficiency {eta} outside [0, 1]")
    return _binomial_loss_kraus(eta, dim)


def two_state_hbsm_inefficient(
    joint: DensityOperator, eta: float, in_mode: int = 0, res_mode: int = 1
) -> dict[BellState, Outcome]:
    """Two-outcome H-BSM with detection efficiency eta.

    The efficiency beam-splitters commute with the measurement's 50:50
    beam-splitter, so the loss maps are applied to the measured modes first
    and the ideal analyzer follows.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"detector efficiency {eta} outside (0, 1]")
    if eta < 1.0:
        joint = apply_kraus(joint, detector_loss_map(eta, joint.space.dims[in_mode]), in_mode)
        joint = apply_kraus(joint, detector_loss_map(eta, joint.space.dims[res_mode]), res_mode)
    return two_state_hbsm(joint, in_mode, res_mode)


# ---------------------------------------------------------------------------
# Beam-splitter-array analyzer (four-outcome implementation, order N >= 2)
# ---------------------------------------------------------------------------


def splitter_matrix(n: int) -> np.ndarray:
    """Orthogonal 2^n x 2^n array matrix, the n-fold Kronecker power of the
    elementary 50:50 splitter (1/sqrt2)[[1,1],[-1,1]]."""
    s1 = np.array([[1.0, 1.0], [-1.0, 1.0]]) / math.sqrt(2.0)
    s = s1
    for _ in range(n - 1):
        s = np.kron(s1, s)
    return s


@dataclass(frozen=True)
class ArraySpec:
    """Order-N analyzer: 2^N modes, 2^N detectors, 2^N - 2 ancilla modes in a
    product of GHZ-type pair states."""

    n: int
    allow_large: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("array order must be >= 2")
        if self.n > 3 and not self.allow_large:
            raise ValueError(
                f"array order {self.n} rejected (combinatorial growth); "
                "set allow_large=True to override"
            )

    @property
    def n_modes(self) -> int:
        return 2**self.n

    @property
    def matrix(self) -> np.ndarray:
        return splitter_matrix(self.n)

    def ancilla_ket(self) -> KetVector:
        """|Xi> = tensor over j = 1..N-1 of (|0...0> + |1...1>)/sqrt2 on 2^j modes."""
        amp = np.array([1.0], dtype=complex)
        dims: tuple[int, ...] = ()
        for j in range(1, self.n):
            block = np.zeros(2 ** (2**j), dtype=complex)
            block[0] = block[-1] = 1.0 / math.sqrt(2.0)
            amp = np.kron(amp, block)
            dims = dims + (2,) * (2**j)
        return KetVector(ModeSpace(dims), amp)


@functools.lru_cache(maxsize=8)
def _projection_vectors(n: int) -> dict[tuple[int, ...], np.ndarray]:
    """Detection-pattern -> projection vector on modes (1, 2).

    For each photon-count pattern, the vector zeta with components
    zeta[m1, m2] such that P(pattern) = <zeta| rho12 |zeta>. Built by
    expanding every input configuration (qubit/resource occupations x ancilla
    GHZ branch) through the array matrix and contracting with the ancillas.
    """
    s = splitter_matrix(n)
    modes = 2**n
    # ancilla block j (j = 1..n-1) occupies 2^j consecutive array inputs
    blocks = []
    start = 2
    for j in range(1, n):
        blocks.append(tuple(range(start, start + 2**j)))
        start += 2**j

    def expand(used_inputs):
        # product over used inputs of sum_i s[i, j] b_i^+, acting on vacuum
        poly = {(0,) * modes: 1.0}
        for j in used_inputs:
            new: dict[tuple[int, ...], float] = {}
            for mono, c in poly.items():
                for i in range(modes):
                    key = mono[:i] + (mono[i] + 1,) + mono[i + 1 :]
                    new[key] = new.get(key, 0.0) + c * s[i, j]
            poly = new
        out = {}
        for mono, c in poly.items():
            amp = c * math.sqrt(math.prod(math.factorial(k) for k in mono))
            if amp != 0.0:
                out[mono] = amp
        return out

    norm = 2.0 ** (-(n - 1) / 2.0)
    vectors: dict[tuple[int, ...], np.ndarray] = {}
    for m1 in (0, 1):
        for m2 in (0, 1):
            for branch in range(2 ** (n - 1)):
                used = [0] * m1 + [1] * m2
                for jb, block in enumerate(blocks):
                    if (branch >> jb) & 1:
                        used.extend(block)
                for pattern, amp in expand(used).items():
                    vec = vectors.setdefault(pattern, np.zeros((2, 2)))
                    vec[m1, m2] += norm * amp
    return {p: v for p, v in vectors.items() if np.max(np.abs(v)) > 1e-14}


GROUPS = ("00", "11", "phi+", "phi-", "psi+", "psi-")

_BELL_VECS = {
    "phi+": np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0),
    "phi-": np.array([1.0, 0.0, 0.0, -1.0]) / math.sqrt(2.0),
    "psi+": np.array([0.0, 1.0, 1.0, 0.0]) / math.sqrt(2.0),
    "psi-": np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0),
}


def _classify(pattern, zeta, n) -> str:
    """Assign a pattern's projection vector to its outcome group by computing
    overlaps; raises if the vector is not proportional to a single target."""
    n_sum = sum(pattern)
    z = zeta.reshape(-1)
    scale = np.linalg.norm(z)
    if n_sum == 0:
        candidates = {"00": np.array([1.0, 0, 0, 0])}
    elif n_sum == 2**n:
        candidates = {"11": np.array([0, 0, 0, 1.0])}
    elif n_sum % 2 == 1:
        candidates = {k: _BELL_VECS[k] for k in ("psi+", "psi-")}
    else:
        candidates = {k: _BELL_VECS[k] for k in ("phi+", "phi-")}
    overlaps = {k: float(v @ z) for k, v in candidates.items()}
    best = max(overlaps, key=lambda k: abs(overlaps[k]))
    residual = z - overlaps[best] * candidates[best]
    if np.max(np.abs(residual)) > 1e-10 * max(scale, 1.0):
        raise ValueError(
            f"pattern {pattern} projects outside its outcome group "
            f"(residual {np.max(np.abs(residual)):.3e})"
        )
    return best


@dataclass(frozen=True)
class ArrayReport:
    """Enumerated vs closed-form outcome-group probabilities for one state."""

    n: int
    group_probs: dict
    closed_form: dict
    p_bsm: float
    p_bsm_closed: float
    p_id: float
    outcomes: tuple


def array_analyzer(spec: ArraySpec, rho12: DensityOperator) -> ArrayReport:
    """Enumerate every detection pattern of the order-N analyzer on a
    two-qubit input state and classify it into the four Bell groups plus the
    |00>/|11> failure groups.

    The enumeration itself is the oracle: the report carries both the
    per-group totals and the closed-form predictions
    P_00(11) = <..>/2^(N-1), P_phi+- = (1 - 2^(1-N)) <..>, P_psi+- = <..>,
    P_BSM = 1 - P_id / 2^(N-1).
    """
    if rho12.space.dims != (2, 2):
        raise ValueError("analyzer input must be two 2-level modes")
    rho = rho12.mat
    totals = {g: 0.0 for g in GROUPS}
    outcomes = []
    for pattern, zeta in _projection_vectors(spec.n).items():
        z = zeta.reshape(-1)
        prob = float(np.real(z @ rho @ z))
        group = _classify(pattern, zeta, spec.n)
        totals[group] += prob
        outcomes.append((pattern, group, prob))

    def diag(idx):
        return float(rho[idx, idx].real)

    def bell(k):
        v = _BELL_VECS[k]
        return float(np.real(v @ rho @ v))

    scale = 2.0 ** (spec.n - 1)
    p_id = diag(0) + diag(3)
    closed = {
        "00": diag(0) / scale,
        "11": diag(3) / scale,
        "phi+": (1.0 - 1.0 / scale) * bell("phi+"),
        "phi-": (1.0 - 1.0 / scale) * bell("phi-"),
        "psi+": bell("psi+"),
        "psi-": bell("psi-"),
    }
    p_bsm = sum(totals[g] for g in ("phi+", "phi-", "psi+", "psi-"))
    return ArrayReport(
        n=spec.n,
        group_probs=totals,
        closed_form=closed,
        p_bsm=p_bsm,
        p_bsm_closed=1.0 - p_id / scale,
        p_id=p_id,
        outcomes=tuple(sorted(outcomes)),
    )
