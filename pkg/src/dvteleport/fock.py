"""Dense linear algebra over truncated Fock spaces.

States live on a tensor product of photon-number-truncated optical modes.
Everything is stored as dense complex arrays; composite dimensions in this
package stay well below ~10^3, where dense is both the simplest and the
fastest representation. All values are immutable after construction and
every operation is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import expm

#: Hard cap on the total dimension of any composite system.
DIM_CAP = 4096

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
#: Probabilities below this are treated as a null measurement outcome.
NULL_OUTCOME_TOL = 1e-14


class CapacityError(Exception):
    """Composite dimension exceeds the configured cap."""


class NullOutcome(Exception):
    """Conditioning on an outcome whose probability is numerically zero."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ModeSpace:
    """Ordered per-mode truncation dimensions of a register of optical modes.

    ``dims[k]`` counts the Fock levels |0>..|dims[k]-1> kept for mode k.
    Mode indices are 0-based and stable under tensor and trace operations.
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"mode dimensions must be >= 1, got {dims}")

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims) if self.dims else 1

    def keep(self, modes: Sequence[int]) -> "ModeSpace":
        """Subspace of the given modes, in ascending mode order."""
        modes = sorted(set(modes))
        if any(m < 0 or m >= self.n_modes for m in modes):
            raise ValueError(f"mode indices {modes} out of range for {self}")
        return ModeSpace(tuple(self.dims[m] for m in modes))

    def drop(self, modes: Sequence[int]) -> "ModeSpace":
        gone = set(modes)
        return ModeSpace(tuple(d for k, d in enumerate(self.dims) if k not in gone))

    def replace(self, mode: int, dim: int) -> "ModeSpace":
        dims = list(self.dims)
        dims[mode] = dim
        return ModeSpace(tuple(dims))

    def __mul__(self, other: "ModeSpace") -> "ModeSpace":
        return ModeSpace(self.dims + other.dims)


@dataclass(frozen=True)
class KetVector:
    """Pure state on a ModeSpace; norm may be < 1 (subnormalized by truncation)."""

    space: ModeSpace
    amp: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex).reshape(-1)
        if amp.size != self.space.total_dim:
            raise ValueError(
                f"amplitude length {amp.size} != space dimension {self.space.total_dim}"
            )
        nrm = float(np.linalg.norm(amp))
        if not 0.0 < nrm <= 1.0 + 1e-10:
            raise ValueError(f"ket norm {nrm} outside (0, 1]")
        object.__setattr__(self, "amp", _freeze(amp))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def normalized(self) -> "KetVector":
        return KetVector(self.space, self.amp / self.norm)

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.space, np.outer(self.amp, self.amp.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Dense density matrix over a truncated multi-mode Fock space.

    ``trace_mass`` records the trace at construction time; renormalization
    produces a new object whose trace_mass preserves the pre-normalization
    value (the probability mass kept by truncation/conditioning).
    """

    space: ModeSpace
    mat: np.ndarray
    trace_mass: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        dim = self.space.total_dim
        mat = np.asarray(self.mat, dtype=complex).reshape(dim, dim)
        herm = float(np.max(np.abs(mat - mat.conj().T))) if dim else 0.0
        if herm > HERMITICITY_TOL:
            raise ValueError(f"matrix not Hermitian: max |rho - rho^+| = {herm:.3e}")
        tr = complex(np.trace(mat))
        if abs(tr.imag) > TRACE_TOL or tr.real > 1.0 + TRACE_TOL or tr.real < -TRACE_TOL:
            raise ValueError(f"trace {tr} outside [0, 1]")
        object.__setattr__(self, "mat", _freeze(mat))
        if self.trace_mass is None:
            object.__setattr__(self, "trace_mass", tr.real)

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)

    def tensor_view(self) -> np.ndarray:
        """View as a (ket dims + bra dims) tensor."""
        d = self.space.dims
        return self.mat.reshape(d + d)

    def renormalized(self) -> "DensityOperator":
        tr = self.trace
        if tr < NULL_OUTCOME_TOL:
            raise NullOutcome(f"cannot renormalize state with trace {tr:.3e}")
        return DensityOperator(self.space, self.mat / tr, trace_mass=tr)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.mat)[0])

    def validate(self, psd_tol: float = 1e-9) -> "DensityOperator":
        """Expensive positivity check; meant for tests and debug paths only."""
        ev = self.min_eigenvalue()
        if ev < -psd_tol:
            raise ValueError(f"state not positive semidefinite: min eigenvalue {ev:.3e}")
        if not self.trace > 0.0:
            raise ValueError(f"state trace {self.trace} not positive")
        return self


def fock_ket(dims: Sequence[int], occupation: Sequence[int]) -> KetVector:
    """Basis ket |n_0 n_1 ...> on modes with the given truncations."""
    space = ModeSpace(tuple(dims))
    occupation = tuple(occupation)
    if len(occupation) != space.n_modes:
        raise ValueError("occupation length does not match number of modes")
    if any(n < 0 or n >= d for n, d in zip(occupation, space.dims)):
        raise ValueError(f"occupation {occupation} outside truncation {space.dims}")
    amp = np.zeros(space.total_dim, dtype=complex)
    amp[int(np.ravel_multi_index(occupation, space.dims))] = 1.0
    return KetVector(space, amp)


def vacuum_ket(dims: Sequence[int]) -> KetVector:
    return fock_ket(dims, (0,) * len(dims))


def annihilation(dim: int) -> np.ndarray:
    """Truncated annihilation operator: a|n> = sqrt(n)|n-1>."""
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def tensor_product(a: DensityOperator, b: DensityOperator) -> DensityOperator:
    """Kronecker product; result modes are a's modes followed by b's."""
    total = a.space.total_dim * b.space.total_dim
    if total > DIM_CAP:
        raise CapacityError(f"composite dimension {total} exceeds cap {DIM_CAP}")
    return DensityOperator(
        a.space * b.space,
        np.kron(a.mat, b.mat),
        trace_mass=a.trace_mass * b.trace_mass,
    )


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    """Trace out every mode not listed in ``keep`` (result in ascending mode order)."""
    keep = sorted(set(keep))
    n = rho.space.n_modes
    if not keep or any(m < 0 or m >= n for m in keep):
        raise ValueError(f"invalid mode subset {keep} for {n} modes")
    t = rho.tensor_view()
    # contract traced-out ket/bra axis pairs one at a time, highest first so
    # remaining axis numbers stay valid
    traced = [m for m in range(n) if m not in keep]
    n_left = n
    for m in sorted(traced, reverse=True):
        t = np.trace(t, axis1=m, axis2=n_left + m)
        n_left -= 1
    dim = math.prod(rho.space.dims[m] for m in keep)
    return DensityOperator(
        rho.space.keep(keep), t.reshape(dim, dim), trace_mass=rho.trace_mass
    )


def apply_kraus(
    rho: DensityOperator, kraus: Sequence[np.ndarray], mode: int
) -> DensityOperator:
    """Apply sum_l K_l rho K_l^+ on one mode.

    Kraus operators may be rectangular (d_out x d_in), changing the mode's
    truncation dimension; all operators must share the same shape.
    """
    dims = rho.space.dims
    if mode < 0 or mode >= len(dims):
        raise ValueError(f"mode {mode} out of range")
    ks = np.asarray(kraus, dtype=complex)
    if ks.ndim != 3 or ks.shape[2] != dims[mode]:
        raise ValueError(
            f"Kraus stack shape {ks.shape} incompatible with mode dimension {dims[mode]}"
        )
    d_in = dims[mode]
    d_out = ks.shape[1]
    pre = math.prod(dims[:mode])
    post = math.prod(dims[mode + 1 :])
    t = rho.mat.reshape(pre, d_in, post, pre, d_in, post)
    out = np.einsum("lam,xmyznw,lbn->xayzbw", ks, t, ks.conj(), optimize=True)
    new_space = rho.space.replace(mode, d_out)
    dim = new_space.total_dim
    return DensityOperator(
        new_space, out.reshape(dim, dim), trace_mass=rho.trace_mass
    )


def project(
    rho: DensityOperator, bra: KetVector, modes: Sequence[int]
) -> tuple[float, DensityOperator | None]:
    """Project the given modes onto |bra> and condition the rest.

    Returns ``(prob, conditional)`` with prob = tr{(|bra><bra| x I) rho} and
    the conditional renormalized to unit trace on the remaining modes. A
    probability below NULL_OUTCOME_TOL is a null outcome: conditional is None.
    When every mode is projected the conditional is a trivial zero-mode state.
    """
    modes = list(modes)
    n = rho.space.n_modes
    if len(set(modes)) != len(modes) or any(m < 0 or m >= n for m in modes):
        raise ValueError(f"invalid projection modes {modes}")
    sub_dims = tuple(rho.space.dims[m] for m in modes)
    if bra.space.dims != sub_dims:
        raise ValueError(f"bra space {bra.space.dims} != projected modes {sub_dims}")
    v = bra.amp.reshape(sub_dims)
    t = rho.tensor_view()
    # <v| on the ket side: remaining axes keep their relative order,
    # bra axes follow unchanged
    t = np.tensordot(v.conj(), t, axes=(tuple(range(len(modes))), tuple(modes)))
    n_ket_rest = n - len(modes)
    bra_axes = tuple(n_ket_rest + m for m in modes)
    t = np.tensordot(t, v, axes=(bra_axes, tuple(range(len(modes)))))
    rest = [m for m in range(n) if m not in modes]
    rest_dim = math.prod(rho.space.dims[m] for m in rest) if rest else 1
    mat = t.reshape(rest_dim, rest_dim)
    prob = float(np.trace(mat).real)
    if prob < NULL_OUTCOME_TOL:
        return max(prob, 0.0), None
    space = rho.space.keep(rest) if rest else ModeSpace(())
    return prob, DensityOperator(space, mat / prob, trace_mass=prob)


def fidelity_pure(psi: KetVector, rho: DensityOperator) -> float:
    """<psi|rho|psi> for a normalized pure target state."""
    if psi.space.dims != rho.space.dims:
        raise ValueError(f"space mismatch {psi.space.dims} vs {rho.space.dims}")
    val = float(np.real(psi.amp.conj() @ rho.mat @ psi.amp))
    return min(max(val, 0.0), 1.0 + 1e-10)


def displacement_operator(xi: complex, dim: int, pad: int | None = None) -> np.ndarray:
    """Displacement operator exp(xi a^+ - xi* a), built in a padded dimension
    and cropped to the top-left ``dim`` block.

    Padding absorbs the truncation error of the matrix exponential; the
    default pad follows the rule dim + ceil(8 |xi|), which keeps the cropped
    block accurate to ~1e-8 for |xi| <= 3.
    """
    if pad is None:
        pad = dim + max(12, math.ceil(8.0 * abs(xi)))
    if pad < dim:
        raise ValueError(f"pad {pad} smaller than target dimension {dim}")
    if pad > DIM_CAP:
        raise CapacityError(f"padded dimension {pad} exceeds cap {DIM_CAP}")
    a = annihilation(pad)
    gen = xi * a.conj().T - np.conj(xi) * a
    return expm(gen)[:dim, :dim]


def displacement_block(xi, dim: int) -> np.ndarray:
    """Exact Fock-basis block <m|D(xi)|n>, m,n < dim, vectorized over xi.

    Uses the closed-form finite sum
        <m|D|n> = e^{-|xi|^2/2} sqrt(m! n!) sum_k xi^{m-k} (-xi*)^{n-k}
                  / ((m-k)! (n-k)! k!),
    which matches the cropped padded exponential of displacement_operator.
    Output shape is xi.shape + (dim, dim).
    """
    xi = np.asarray(xi, dtype=complex)
    shape = xi.shape
    x = xi.reshape(-1)
    nxc = -np.conj(x)
    pow_x = np.ones((dim, x.size), dtype=complex)
    pow_nxc = np.ones((dim, x.size), dtype=complex)
    for p in range(1, dim):
        pow_x[p] = pow_x[p - 1] * x
        pow_nxc[p] = pow_nxc[p - 1] * nxc
    lg = [math.lgamma(k + 1) for k in range(dim + 1)]
    out = np.zeros((x.size, dim, dim), dtype=complex)
    for m in range(dim):
        for n in range(dim):
            acc = np.zeros(x.size, dtype=complex)
            for k in range(min(m, n) + 1):
                c = math.exp(0.5 * (lg[m] + lg[n]) - lg[m - k] - lg[n - k] - lg[k])
                acc += c * pow_x[m - k] * pow_nxc[n - k]
            out[:, m, n] = acc
    out *= np.exp(-0.5 * np.abs(x) ** 2)[:, None, None]
    return out.reshape(shape + (dim, dim))
