"""Non-Gaussian operations on the resource channel.

Qubit-subspace truncation, quantum scissors (with ideal or inefficient
single-photon detectors), photon catalysis, and the quadrature route to the
photon-catalysed characteristic function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import DensityOperator, NullOutcome, apply_kraus
from .states import TmsvParams, TwoModeGaussianCharFn, lossy_tmsv_charfn


class QuadratureError(Exception):
    """Numerical quadrature failed its convergence check."""


@dataclass(frozen=True)
class QsParams:
    """Quantum-scissors settings: beam-splitter transmissivity, detector
    efficiency, and the cutoff of the inefficient-detector operator series."""

    ts: float
    eta: float = 1.0
    series_cutoff: int | None = None

    def __post_init__(self):
        if not 0.0 < self.ts < 0.5:
            raise ValueError(f"scissors transmissivity {self.ts} outside (0, 0.5)")
        # eta = 0 is admitted so the all-terms-vanish case surfaces as a null
        # outcome at application time; protocol configs require eta > 0
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"detector efficiency {self.eta} outside [0, 1]")


@dataclass(frozen=True)
class PcParams:
    tc: float

    def __post_init__(self):
        if not 0.0 < self.tc < 0.25:
            raise ValueError(f"catalysis transmissivity {self.tc} outside (0, 0.25)")


def _conditional(rho: DensityOperator, op: np.ndarray, mode: int):
    out = apply_kraus(rho, [op], mode)
    p = out.trace
    if p < 1e-14:
        raise NullOutcome(f"operation success probability {p:.3e} is numerically zero")
    return p, out.renormalized()


def truncate_qubit_subspace(
    rho: DensityOperator, mode: int
) -> tuple[float, DensityOperator]:
    """Project one mode onto span{|0>,|1>} via (|0><0| + |1><1|)/sqrt(2).

    Returns the success probability (half the kept two-level mass) and the
    renormalized state with the mode reduced to dimension 2.
    """
    d = rho.space.dims[mode]
    m = np.zeros((2, d), dtype=complex)
    m[0, 0] = m[1, 1] = 1.0 / math.sqrt(2.0)
    return _conditional(rho, m, mode)


def quantum_scissors(
    rho: DensityOperator, ts: float, mode: int
) -> tuple[float, DensityOperator]:
    """Ideal quantum scissors: sqrt(Ts)|0><0| + sqrt(1-Ts)|1><1| on one mode.

    Output mode dimension is 2. For Ts < 1/2 this amplifies the single-photon
    amplitude relative to vacuum (entanglement concentration on the resource).
    """
    if not 0.0 < ts < 0.5:
        raise ValueError(f"scissors transmissivity {ts} outside (0, 0.5)")
    d = rho.space.dims[mode]
    m = np.zeros((2, d), dtype=complex)
    m[0, 0] = math.sqrt(ts)
    m[1, 1] = math.sqrt(1.0 - ts)
    return _conditional(rho, m, mode)


def photon_catalysis(
    rho: DensityOperator, tc: float, mode: int
) -> tuple[float, DensityOperator]:
    """Single-photon catalysis: diagonal reweighting
    <n|R|n> = sqrt(Tc)((Tc-1) n / Tc + 1) sqrt(Tc)^n on one mode."""
    if not 0.0 < tc < 0.25:
        raise ValueError(f"catalysis transmissivity {tc} outside (0, 0.25)")
    d = rho.space.dims[mode]
    n = np.arange(d, dtype=float)
    diag = math.sqrt(tc) * ((tc - 1.0) * n / tc + 1.0) * math.sqrt(tc) ** n
    return _conditional(rho, np.diag(diag).astype(complex), mode)


def scissors_click_operator(n: int, m: int, ts: float, dim: int) -> np.ndarray:
    """Scissors operator conditioned on n photons reaching the heralding
    detector (one registered) and m the silent one (none registered).

    Maps ``dim`` input levels to the {|0>,|1>} output; reduces to the ideal
    scissors operator for (n, m) = (1, 0).
    """
    out = np.zeros((2, dim), dtype=complex)
    pref = (-1.0) ** m * 2.0 ** (-(n + m - 1) / 2.0)
    if 0 <= n + m - 1 < dim:
        out[0, n + m - 1] = (
            pref
            * (n - m)
            * math.sqrt(math.factorial(n + m - 1) / (math.factorial(n) * math.factorial(m)))
            * math.sqrt(ts)
        )
    if n + m < dim:
        out[1, n + m] = (
            pref
            * math.sqrt(math.factorial(n + m) / (math.factorial(n) * math.factorial(m)))
            * math.sqrt(1.0 - ts)
        )
    return out


def quantum_scissors_inefficient(
    rho: DensityOperator,
    params: QsParams,
    mode: int,
) -> tuple[float, DensityOperator]:
    """Quantum scissors with detection efficiency eta on both detectors.

    Sums the click-pattern operators weighted by n eta (1-eta)^(n+m-1), the
    probability that a number-resolving detector registers exactly one of n
    arrivals while its partner registers none of m. The series is cut at
    n + m <= dim + 2; higher terms annihilate the truncated input. At eta = 1
    only the (1, 0) term survives and the map equals the ideal scissors.
    """
    d = rho.space.dims[mode]
    cutoff = params.series_cutoff if params.series_cutoff is not None else d + 2
    if cutoff < d:
        raise ValueError(f"series cutoff {cutoff} below state dimension {d}")
    eta = params.eta
    kraus = []
    for n in range(1, cutoff + 1):
        for m in range(0, cutoff + 1 - n):
            w = n * eta * (1.0 - eta) ** (n + m - 1)
            if w == 0.0:
                continue
            op = scissors_click_operator(n, m, params.ts, d)
            if np.any(op):
                kraus.append(math.sqrt(w) * op)
    if not kraus:
        raise NullOutcome("no click pattern has nonzero weight (eta = 0)")
    out = apply_kraus(rho, kraus, mode)
    p = out.trace
    if p < 1e-14:
        raise NullOutcome(f"scissors success probability {p:.3e} is numerically zero")
    return p, out.renormalized()


def distill_both_modes(rho, op, *args) -> tuple[float, DensityOperator]:
    """Apply the same single-mode conditional operation to both resource modes.

    The overall success probability is the product of the two per-step
    probabilities, which equals the total kept trace.
    """
    p1, rho = op(rho, *args, 0)
    p2, rho = op(rho, *args, 1)
    return p1 * p2, rho


class PcCharFn:
    """Photon-catalysed characteristic function by 4D quadrature.

    chi_PC(xi1, xi2) integrates the Gaussian resource characteristic function
    against one catalysis kernel per mode,

        kernel_i(gamma) = chi_1(k(xi_i, gamma)) chi_1(k(gamma, xi_i)) / (pi (1-Tc)),
        k(x, y) = (x - sqrt(Tc) y) / sqrt(1 - Tc),

    where chi_1 is the single-photon characteristic function
    (1 - |.|^2) e^{-|.|^2/2}. Each complex gamma integral runs over a disc
    (polar Gauss-Legendre x uniform angles); a doubled-node evaluation guards
    convergence. This is the cross-check oracle for the density-operator PC
    route, including chi(0,0) = unnormalized success probability.
    """

    def __init__(
        self,
        params: TmsvParams,
        pc: PcParams,
        radius: float = 6.0,
        n_radial: int = 24,
        n_angular: int = 32,
        rel_tol: float = 1e-4,
    ):
        self.chi = lossy_tmsv_charfn(params)
        self.tc = pc.tc
        self.radius = radius
        self.n_radial = n_radial
        self.n_angular = n_angular
        self.rel_tol = rel_tol

    def _disc_nodes(self, n_radial, n_angular):
        x, w = np.polynomial.legendre.leggauss(n_radial)
        r = 0.5 * self.radius * (x + 1.0)
        wr = 0.5 * self.radius * w * r  # includes the polar Jacobian
        ang = 2.0 * np.pi * np.arange(n_angular) / n_angular
        wa = 2.0 * np.pi / n_angular
        g = (r[:, None] * np.exp(1j * ang)[None, :]).reshape(-1)
        wgt = (wr[:, None] * np.full(n_angular, wa)[None, :]).reshape(-1)
        return g, wgt

    def _mode_factor(self, xi, g):
        tc = self.tc
        s, c = math.sqrt(tc), math.sqrt(1.0 - tc)

        def chi1(beta):
            b2 = np.abs(beta) ** 2
            return (1.0 - b2) * np.exp(-0.5 * b2)

        return chi1((xi - s * g) / c) * chi1((g - s * xi) / c) / (np.pi * (1.0 - tc))

    def _evaluate(self, xi1, xi2, n_radial, n_angular):
        g, w = self._disc_nodes(n_radial, n_angular)
        # Gaussian diagonal factors fold into the per-mode integrands; the
        # cross term couples the two discs through a real exponential matrix.
        a = w * self._mode_factor(xi1, g) * np.exp(-self.chi.c1 * np.abs(g) ** 2)
        b = w * self._mode_factor(xi2, g) * np.exp(-self.chi.c2 * np.abs(g) ** 2)
        cross = np.outer(g.real, g.real)
        cross -= np.outer(g.imag, g.imag)
        cross *= 2.0 * self.chi.c12
        np.exp(cross, out=cross)
        # keep the big coupling matrix real: contract real/imag parts separately
        v = (a.real @ cross) + 1j * (a.imag @ cross)
        return complex(v @ b)

    def __call__(self, xi1, xi2):
        coarse = self._evaluate(xi1, xi2, self.n_radial, self.n_angular)
        fine = self._evaluate(xi1, xi2, 2 * self.n_radial, 2 * self.n_angular)
        scale = max(abs(fine), 1e-12)
        if abs(fine - coarse) / scale > self.rel_tol:
            raise QuadratureError(
                f"catalysis quadrature not converged at ({xi1}, {xi2}): "
                f"{coarse} vs {fine}"
            )
        return fine


def pc_charfn(params: TmsvParams, pc: PcParams, **kwargs) -> PcCharFn:
    return PcCharFn(params, pc, **kwargs)
