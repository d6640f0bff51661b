"""Truncated Fock-space operator algebra and canonical state constructors.

Everything downstream (master-equation models, tomography, gates) is built
from the dense operators and states defined here.  Conventions fixed once,
globally:

* A multimode space is the Kronecker product in the fixed mode order
  (memory, buffer, transmon); ``tensor(a, b)`` puts ``a`` on the slow
  (leftmost) index.
* Quadrature convention: x = (m + m†)/2, so the vacuum variance of x is 1/4.
* Matrix exponentials use scipy's scaling-and-squaring Pade implementation.

Truncation guard: an amplitude ``a`` needs ``dim > |a|^2 + 4|a|`` so the
displaced vacuum keeps more than 1 - 1e-6 of its norm.  Constructors check
the guard by default; pass ``check=False`` to override per call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, TruncationError

__all__ = [
    "Operator",
    "PureState",
    "DensityMatrix",
    "annihilation_op",
    "creation_op",
    "number_op",
    "identity_op",
    "parity_op",
    "displacement_op",
    "squeeze_op",
    "fock_state",
    "coherent_state",
    "cat_state",
    "tensor",
    "partial_trace",
    "min_dim_for_amplitude",
    "check_truncation",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_TOL = 1e-8
NORM_TOL = 1e-10


def min_dim_for_amplitude(amplitude: complex) -> int:
    """Smallest truncation satisfying dim > |a|^2 + 4|a|."""
    a = abs(amplitude)
    return int(math.floor(a * a + 4.0 * a)) + 1


def check_truncation(dim: int, amplitude: complex) -> None:
    """Raise TruncationError if ``dim`` violates the guard for ``amplitude``."""
    required = min_dim_for_amplitude(amplitude)
    if dim < required:
        raise TruncationError(
            f"dim={dim} too small for amplitude |a|={abs(amplitude):.3f}; "
            f"need dim >= {required}",
            required_dim=required,
        )


def _as_dims(dims) -> tuple[int, ...]:
    out = tuple(int(d) for d in (dims if np.iterable(dims) else (dims,)))
    if any(d < 1 for d in out):
        raise DimensionError(f"mode dimensions must be positive, got {out}")
    return out


@dataclass(frozen=True)
class Operator:
    """Dense complex matrix on a truncated (multi-mode) Fock space."""

    dims: tuple[int, ...]
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        dims = _as_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        entries = np.asarray(self.entries, dtype=np.complex128)
        total = int(np.prod(dims))
        if entries.shape != (total, total):
            raise DimensionError(
                f"operator entries {entries.shape} do not match dims {dims} "
                f"(expected {(total, total)})"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.dims, self.entries.conj().T, self.label + "^dag")

    def __matmul__(self, other: "Operator") -> "Operator":
        if self.dims != other.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")
        return Operator(self.dims, self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        if self.dims != other.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")
        return Operator(self.dims, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        if self.dims != other.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")
        return Operator(self.dims, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.dims, self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.dims, -self.entries)


@dataclass(frozen=True)
class PureState:
    """Normalized ket on a truncated Fock space."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        dims = _as_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        amp = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if amp.size != int(np.prod(dims)):
            raise DimensionError(
                f"amplitude vector of length {amp.size} does not match dims {dims}"
            )
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 by more than {NORM_TOL}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expect(self, op: Operator | np.ndarray) -> complex:
        mat = op.entries if isinstance(op, Operator) else np.asarray(op)
        return complex(np.vdot(self.amplitudes, mat @ self.amplitudes))

    def to_density_matrix(self) -> "DensityMatrix":
        rho = np.outer(self.amplitudes, self.amplitudes.conj())
        return DensityMatrix(self.dims, rho, validate=False)


class DensityMatrix:
    """Trace-one Hermitian positive matrix on a truncated Fock space.

    ``validate=True`` enforces the construction invariants (Hermiticity to
    1e-10, trace to 1e-8, minimum eigenvalue >= -1e-8); solver internals
    construct with ``validate=False`` and the test suite checks the recorded
    states explicitly.
    """

    __slots__ = ("dims", "entries")

    def __init__(self, dims, entries, validate: bool = True):
        self.dims = _as_dims(dims)
        entries = np.asarray(entries, dtype=np.complex128)
        total = int(np.prod(self.dims))
        if entries.shape != (total, total):
            raise DimensionError(
                f"density matrix {entries.shape} does not match dims {self.dims}"
            )
        self.entries = entries
        if validate:
            self.validate()

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def validate(self, check_positivity: bool = True) -> None:
        herm = np.max(np.abs(self.entries - self.entries.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"density matrix not Hermitian: max deviation {herm:.2e}")
        tr = self.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} deviates from 1")
        if check_positivity:
            lam = np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2)
            if lam.min() < -EIGENVALUE_TOL:
                raise ValueError(f"density matrix has eigenvalue {lam.min():.2e} < -{EIGENVALUE_TOL}")

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def expect(self, op: Operator | np.ndarray) -> complex:
        mat = op.entries if isinstance(op, Operator) else np.asarray(op)
        return complex(np.trace(mat @ self.entries))

    def purity(self) -> float:
        return float(np.real(np.sum(self.entries * self.entries.T)))

    def fidelity_to(self, psi: PureState | np.ndarray) -> float:
        """Overlap <psi|rho|psi> with a pure target."""
        vec = psi.amplitudes if isinstance(psi, PureState) else np.asarray(psi).ravel()
        return float(np.real(np.vdot(vec, self.entries @ vec)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.entries + self.entries.conj().T) / 2).min())

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.dims, self.entries.copy(), validate=False)


# ---------------------------------------------------------------------------
# Single-mode operators
# ---------------------------------------------------------------------------

def annihilation_op(dim: int) -> Operator:
    """Annihilation operator a with <n-1|a|n> = sqrt(n)."""
    if dim < 2:
        raise DimensionError(f"annihilation operator needs dim >= 2, got {dim}")
    mat = np.zeros((dim, dim), dtype=np.complex128)
    ns = np.arange(1, dim)
    mat[ns - 1, ns] = np.sqrt(ns)
    return Operator((dim,), mat, "a")


def creation_op(dim: int) -> Operator:
    return Operator((dim,), annihilation_op(dim).entries.conj().T, "a^dag")


def number_op(dim: int) -> Operator:
    if dim < 1:
        raise DimensionError(f"number operator needs dim >= 1, got {dim}")
    return Operator((dim,), np.diag(np.arange(dim, dtype=np.complex128)), "n")


def identity_op(dim: int) -> Operator:
    if dim < 1:
        raise DimensionError(f"identity needs dim >= 1, got {dim}")
    return Operator((dim,), np.eye(dim, dtype=np.complex128), "I")


def parity_op(dim: int) -> Operator:
    """Photon-number parity, diag((-1)^n)."""
    if dim < 1:
        raise DimensionError(f"parity operator needs dim >= 1, got {dim}")
    signs = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0).astype(np.complex128)
    return Operator((dim,), np.diag(signs), "P")


def displacement_op(dim: int, beta: complex, check: bool = True) -> Operator:
    """Unitary displacement D(beta) = exp(beta a^dag - beta* a)."""
    if check:
        check_truncation(dim, beta)
    a = annihilation_op(dim).entries
    gen = beta * a.conj().T - np.conj(beta) * a
    return Operator((dim,), expm(gen), f"D({beta})")


def squeeze_op(dim: int, r: float) -> Operator:
    """Single-mode squeezing exp(r (a^2 - a^dag^2) / 2); r > 0 squeezes x."""
    if dim < 2:
        raise DimensionError(f"squeeze operator needs dim >= 2, got {dim}")
    if abs(r) > 3.0:
        raise TruncationError(f"|r|={abs(r)} exceeds the truncation sanity bound 3")
    a = annihilation_op(dim).entries
    a2 = a @ a
    gen = (r / 2.0) * (a2 - a2.conj().T)
    return Operator((dim,), expm(gen), f"S({r})")


# ---------------------------------------------------------------------------
# Canonical states
# ---------------------------------------------------------------------------

def fock_state(dim: int, n: int) -> PureState:
    if not 0 <= n < dim:
        raise DimensionError(f"Fock index {n} outside truncation 0..{dim - 1}")
    amp = np.zeros(dim, dtype=np.complex128)
    amp[n] = 1.0
    return PureState((dim,), amp)


def _coherent_amplitudes(dim: int, alpha: complex) -> np.ndarray:
    # exp(-|a|^2/2) a^n / sqrt(n!) evaluated stably in log space
    ns = np.arange(dim)
    if alpha == 0:
        amp = np.zeros(dim, dtype=np.complex128)
        amp[0] = 1.0
        return amp
    logmag = -0.5 * abs(alpha) ** 2 + ns * np.log(abs(alpha)) - 0.5 * np.cumsum(
        np.concatenate(([0.0], np.log(np.arange(1, dim))))
    )
    phase = np.exp(1j * ns * np.angle(alpha))
    return np.exp(logmag) * phase


def coherent_state(dim: int, alpha: complex, check: bool = True) -> PureState:
    if check:
        check_truncation(dim, alpha)
    amp = _coherent_amplitudes(dim, alpha)
    amp = amp / np.linalg.norm(amp)
    return PureState((dim,), amp)


CAT_PHASES = {"+": 1.0, "-": -1.0, "+i": 1.0j, "-i": -1.0j}


def cat_state(dim: int, alpha: complex, phase_label: str = "+", check: bool = True) -> PureState:
    """Cat state |alpha> + c |-alpha| with c in {+1, -1, +i, -i}, normalized."""
    if phase_label not in CAT_PHASES:
        raise ValueError(f"phase_label must be one of {sorted(CAT_PHASES)}, got {phase_label!r}")
    if check:
        check_truncation(dim, alpha)
    c = CAT_PHASES[phase_label]
    amp = _coherent_amplitudes(dim, alpha) + c * _coherent_amplitudes(dim, -alpha)
    amp = amp / np.linalg.norm(amp)
    return PureState((dim,), amp)


# ---------------------------------------------------------------------------
# Multi-mode plumbing
# ---------------------------------------------------------------------------

def tensor(a: Operator, b: Operator) -> Operator:
    """Kronecker product; ``a`` is the slower (leftmost) mode."""
    return Operator(a.dims + b.dims, np.kron(a.entries, b.entries))


def tensor_states(a: PureState, b: PureState) -> PureState:
    return PureState(a.dims + b.dims, np.kron(a.amplitudes, b.amplitudes))


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Trace out all modes except ``keep`` (an index or tuple of indices)."""
    dims = rho.dims
    n = len(dims)
    keep_idx = tuple(sorted((keep,) if isinstance(keep, int) else tuple(keep)))
    if any(k < 0 or k >= n for k in keep_idx):
        raise DimensionError(f"keep={keep_idx} out of range for {n} modes")
    drop = [i for i in range(n) if i not in keep_idx]
    t = rho.entries.reshape(dims + dims)
    for count, i in enumerate(drop):
        ax = i - count  # axes shift as we trace
        t = np.trace(t, axis1=ax, axis2=ax + len(t.shape) // 2)
    kept_dims = tuple(dims[i] for i in keep_idx)
    total = int(np.prod(kept_dims))
    return DensityMatrix(kept_dims, t.reshape(total, total), validate=False)


# ---------------------------------------------------------------------------
# Fast exact displacement action (matches displacement_op inside the guard)
# ---------------------------------------------------------------------------

def displace_vector(vec: np.ndarray, beta: complex) -> np.ndarray:
    """Apply D(beta) to a ket using the normal-ordered factorization.

    Uses D = e^{-|b|^2/2} e^{b a^dag} e^{-b* a}; both exponentials are
    polynomials of the nilpotent truncated ladder operators, so the matrix
    elements below the truncation edge are exact.  Used in hot loops
    (Wigner maps) where building expm per point would dominate.
    """
    dim = vec.size
    if beta == 0:
        return vec.astype(np.complex128, copy=True)
    sq = np.sqrt(np.arange(1, dim))
    # e^{-b* a}: Taylor series of the nilpotent lowering operator
    c = -np.conj(beta)
    acc = vec.astype(np.complex128, copy=True)
    term = acc.copy()
    for k in range(1, dim):
        lowered = np.zeros(dim, dtype=np.complex128)
        lowered[:-1] = sq * term[1:]
        term = (c / k) * lowered
        acc += term
        if not np.any(term):
            break
    # e^{b a^dag}: Taylor series of the nilpotent raising operator
    out = acc
    acc = out.copy()
    term = out.copy()
    for k in range(1, dim):
        raised = np.zeros(dim, dtype=np.complex128)
        raised[1:] = sq * term[:-1]
        term = (beta / k) * raised
        acc += term
        if not np.any(term):
            break
    return math.exp(-0.5 * abs(beta) ** 2) * acc
