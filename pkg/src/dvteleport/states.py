"""Two-mode squeezed vacuum resource channels.

Builds TMSV states, pushes them through photon-loss channels, and exposes
both formalisms: Fock-basis density operators and characteristic functions
(closed-form Gaussian and numeric-from-density).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    CapacityError,
    DensityOperator,
    KetVector,
    ModeSpace,
    apply_kraus,
    displacement_block,
)

LN10 = math.log(10.0)


def transmissivity_from_db(loss_db: float) -> float:
    """Channel loss in dB to transmissivity, T = 10^(-loss/10)."""
    return 10.0 ** (-loss_db / 10.0)


def transmissivity_to_db(t: float) -> float:
    return -10.0 * math.log10(t)


def squeezing_from_db(r_db: float) -> float:
    """Squeezing in dB (10 log10 e^{2r}) to the dimensionless parameter r."""
    return r_db * LN10 / 20.0


def squeezing_to_db(r: float) -> float:
    return 20.0 * r / LN10


def choose_truncation_dim(lam: float, mass: float = 0.95) -> int:
    """Smallest dimension d whose truncated TMSV keeps probability mass > mass.

    The kept mass of the ideal TMSV truncated to levels 0..d-1 is 1 - lam^(2d).
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda {lam} outside [0, 1)")
    if not 0.0 < mass < 1.0:
        raise ValueError(f"mass {mass} outside (0, 1)")
    if lam == 0.0:
        return 1
    d = max(1, math.ceil(math.log(1.0 - mass) / (2.0 * math.log(lam))))
    while 1.0 - lam ** (2 * d) <= mass:  # guard the fp boundary
        d += 1
    while d > 1 and 1.0 - lam ** (2 * (d - 1)) > mass:
        d -= 1
    if d * d > 4096:
        raise CapacityError(f"truncation dimension {d} too large for lambda={lam}")
    return d


@dataclass(frozen=True)
class TmsvParams:
    """Squeezing, channel transmissivities and truncation of the resource.

    ``dim`` defaults to the smallest dimension keeping more than ``mass`` of
    the ideal TMSV probability, clamped to >= 2 so the single-photon level
    always exists.
    """

    r: float
    t1: float = 1.0
    t2: float = 1.0
    dim: int | None = None
    mass: float = 0.95

    def __post_init__(self):
        if self.r < 0.0:
            raise ValueError(f"squeezing r={self.r} must be >= 0")
        for t in (self.t1, self.t2):
            if not 0.0 < t <= 1.0:
                raise ValueError(f"transmissivity {t} outside (0, 1]")
        if self.dim is None:
            d = max(2, choose_truncation_dim(self.lam, self.mass))
            object.__setattr__(self, "dim", d)
        elif self.dim < 2:
            raise ValueError("resource dimension must be >= 2")

    @property
    def lam(self) -> float:
        return math.tanh(self.r)

    @classmethod
    def from_db(
        cls,
        r_db: float,
        loss_db: float = 0.0,
        loss2_db: float | None = None,
        dim: int | None = None,
        mass: float = 0.95,
    ) -> "TmsvParams":
        """Build from dB units; loss2_db defaults to loss_db (symmetric channels)."""
        t1 = transmissivity_from_db(loss_db)
        t2 = transmissivity_from_db(loss_db if loss2_db is None else loss2_db)
        return cls(r=squeezing_from_db(r_db), t1=t1, t2=t2, dim=dim, mass=mass)


def tmsv_ket(lam: float, dim: int) -> KetVector:
    """Truncated TMSV ket sqrt(1-lam^2) sum_n lam^n |nn>, subnormalized by the tail."""
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lambda {lam} outside [0, 1)")
    space = ModeSpace((dim, dim))
    amp = np.zeros((dim, dim), dtype=complex)
    amp[np.arange(dim), np.arange(dim)] = math.sqrt(1.0 - lam**2) * lam ** np.arange(dim)
    return KetVector(space, amp.reshape(-1))


def _binomial_loss_kraus(t: float, dim: int) -> list[np.ndarray]:
    # K_l |n> = sqrt(C(n,l) t^(n-l) (1-t)^l) |n-l>; l = photons lost
    kraus = []
    for l in range(dim):
        k = np.zeros((dim, dim), dtype=complex)
        for n in range(l, dim):
            k[n - l, n] = math.sqrt(math.comb(n, l) * t ** (n - l) * (1.0 - t) ** l)
        kraus.append(k)
    return kraus


def loss_channel(t: float, dim: int) -> list[np.ndarray]:
    """Kraus operators of the transmissivity-t pure-loss channel on ``dim`` levels.

    The family sums to the identity on the truncated space; t = 0 is rejected
    as degenerate.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError(f"transmissivity {t} outside (0, 1]")
    return _binomial_loss_kraus(t, dim)


def lossy_tmsv(params: TmsvParams) -> DensityOperator:
    """Truncated TMSV sent through two independent loss channels, renormalized.

    The pre-normalization probability mass (the truncated-tail record) is kept
    in ``trace_mass``.
    """
    rho = tmsv_ket(params.lam, params.dim).to_density()
    if params.t1 < 1.0:
        rho = apply_kraus(rho, loss_channel(params.t1, params.dim), mode=0)
    if params.t2 < 1.0:
        rho = apply_kraus(rho, loss_channel(params.t2, params.dim), mode=1)
    return rho.renormalized()


class TwoModeGaussianCharFn:
    """chi(xi1, xi2) = exp(-c1|xi1|^2 - c2|xi2|^2 + c12 (xi1 xi2 + xi1* xi2*))."""

    def __init__(self, c1: float, c2: float, c12: float):
        self.c1 = float(c1)
        self.c2 = float(c2)
        self.c12 = float(c12)

    def __call__(self, xi1, xi2):
        xi1 = np.asarray(xi1, dtype=complex)
        xi2 = np.asarray(xi2, dtype=complex)
        cross = 2.0 * self.c12 * (xi1 * xi2).real
        out = np.exp(
            -self.c1 * np.abs(xi1) ** 2 - self.c2 * np.abs(xi2) ** 2 + cross
        )
        return out if out.shape else complex(out)


def tmsv_charfn(params: TmsvParams) -> TwoModeGaussianCharFn:
    """Closed-form characteristic function of the ideal (untruncated) TMSV."""
    lam = params.lam
    a = (1.0 + lam**2) / (2.0 * (1.0 - lam**2))
    return TwoModeGaussianCharFn(a, a, lam / (1.0 - lam**2))


def lossy_tmsv_charfn(params: TmsvParams) -> TwoModeGaussianCharFn:
    """Closed form after the two loss channels: vacuum-noise envelope times the
    ideal characteristic function at sqrt(T)-scaled arguments."""
    lam = params.lam
    a = (1.0 + lam**2) / (2.0 * (1.0 - lam**2))
    c1 = 0.5 * (1.0 - params.t1) + params.t1 * a
    c2 = 0.5 * (1.0 - params.t2) + params.t2 * a
    c12 = lam * math.sqrt(params.t1 * params.t2) / (1.0 - lam**2)
    return TwoModeGaussianCharFn(c1, c2, c12)


class DensityCharFn:
    """Numeric characteristic function tr{D(xi1) D(xi2) rho} of a one- or
    two-mode density operator, using exact Fock-basis displacement blocks."""

    def __init__(self, rho: DensityOperator):
        if rho.space.n_modes not in (1, 2):
            raise ValueError("characteristic function defined for 1 or 2 modes")
        self.rho = rho

    def __call__(self, xi1, xi2=None):
        dims = self.rho.space.dims
        xi1 = np.asarray(xi1, dtype=complex)
        if self.rho.space.n_modes == 1:
            if xi2 is not None:
                raise ValueError("single-mode state takes one argument")
            d1 = displacement_block(xi1, dims[0])
            out = np.einsum("ab,...ba->...", self.rho.mat, d1)
        else:
            if xi2 is None:
                raise ValueError("two-mode state takes two arguments")
            xi2 = np.asarray(xi2, dtype=complex)
            xi1, xi2 = np.broadcast_arrays(xi1, xi2)
            d1 = displacement_block(xi1, dims[0])
            d2 = displacement_block(xi2, dims[1])
            t = self.rho.tensor_view()
            out = np.einsum("abcd,...ca,...db->...", t, d1, d2, optimize=True)
        return out if out.shape else complex(out)


def charfn_from_density(rho: DensityOperator) -> DensityCharFn:
    return DensityCharFn(rho)


class QubitCharFn:
    """Closed-form characteristic function of the single-photon qubit
    cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.

    chi(xi) = e^{-|xi|^2/2} [c^2 + s^2 (1 - |xi|^2) + c s (xi e^{-i phi} - xi* e^{i phi})]
    (verified against the density-operator route in the test suite).
    """

    def __init__(self, theta: float, phi: float):
        self.theta = float(theta)
        self.phi = float(phi)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=complex)
        c = math.cos(self.theta / 2.0)
        s = math.sin(self.theta / 2.0)
        ph = np.exp(-1j * self.phi)
        body = (
            c * c
            + s * s * (1.0 - np.abs(xi) ** 2)
            + c * s * (xi * ph - np.conj(xi * ph))
        )
        out = np.exp(-0.5 * np.abs(xi) ** 2) * body
        return out if out.shape else complex(out)


def qubit_charfn(theta: float, phi: float) -> QubitCharFn:
    return QubitCharFn(theta, phi)
