"""Fixed-step Lindblad master-equation integrator.

Integrates drho/dt = -i[H(t), rho] + sum_k rate_k D[L_k](rho) with classical
RK4 on a fixed grid, which keeps trajectories deterministic and reproducible
(no adaptive-step nondeterminism).  Units: time in ns, H in rad/ns (hbar=1),
rates in 1/ns.

The Hamiltonian is split into a constant part and drive terms
H(t) = H0 + sum_d f_d(t) B_d + f_d(t)* B_d^dag so that only scalar envelope
evaluations happen inside the step loop.  Operators are converted to CSR
internally; every ladder-operator polynomial appearing in the models here is
sparse, which makes the right-hand side O(dim^2) instead of O(dim^3).

Default step sizes used by the model builders: 0.1 ns for bipartite
memory-buffer models (1/kappa_b is about 4 ns, the fastest scale) and 1 ns
for adiabatically eliminated memory-only models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, DivergenceError, StepSizeError
from .fock import DensityMatrix, Operator

__all__ = [
    "LindbladModel",
    "Trajectory",
    "dissipator_apply",
    "evolve",
    "suggest_dt",
    "steady_state_reached",
]

DEFAULT_TRACE_ERROR = 1e-4


def _entries(op) -> np.ndarray:
    return op.entries if isinstance(op, Operator) else np.asarray(op, dtype=np.complex128)


@dataclass
class LindbladModel:
    """Time-dependent Hamiltonian plus (rate, jump operator) channels.

    ``drives`` holds (envelope, operator) pairs; each contributes
    f(t) * B + f(t)^* B^dag to the Hamiltonian, so a real envelope on a
    non-Hermitian B models the usual drive eps(t) b^dag + eps(t)^* b.
    """

    dims: tuple[int, ...]
    h0: Operator | None = None
    drives: list[tuple[Callable[[float], complex], Operator]] = field(default_factory=list)
    dissipators: list[tuple[float, Operator]] = field(default_factory=list)

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        total = int(np.prod(self.dims))
        if self.h0 is not None and _entries(self.h0).shape != (total, total):
            raise DimensionError("h0 does not match model dims")
        for _, op in self.drives:
            if _entries(op).shape != (total, total):
                raise DimensionError("drive operator does not match model dims")
        for rate, op in self.dissipators:
            if rate < 0:
                raise ValueError(f"dissipator rate {rate} is negative")
            if _entries(op).shape != (total, total):
                raise DimensionError("jump operator does not match model dims")

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def hamiltonian(self, t: float) -> Operator:
        """Dense H(t) in rad/ns."""
        h = np.zeros((self.dim, self.dim), dtype=np.complex128)
        if self.h0 is not None:
            h += _entries(self.h0)
        for f, op in self.drives:
            ft = complex(f(t))
            b = _entries(op)
            h += ft * b + np.conj(ft) * b.conj().T
        return Operator(self.dims, h, "H(t)")


@dataclass
class Trajectory:
    """Time grid, named expectation-value records, and decimated states."""

    times: np.ndarray
    records: dict[str, np.ndarray]
    states: list[DensityMatrix] = field(default_factory=list)
    state_times: np.ndarray | None = None

    def final_state(self) -> DensityMatrix:
        if not self.states:
            raise ValueError("trajectory stored no states")
        return self.states[-1]


def dissipator_apply(L, rate: float, rho) -> np.ndarray:
    """rate * (L rho L^dag - {L^dag L, rho}/2); traceless by construction."""
    Lm = _entries(L)
    rm = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    if Lm.shape != rm.shape:
        raise DimensionError(f"jump operator {Lm.shape} vs state {rm.shape}")
    LdL = Lm.conj().T @ Lm
    return rate * (Lm @ rm @ Lm.conj().T - 0.5 * (LdL @ rm + rm @ LdL))


class _Rhs:
    """Precompiled right-hand side of the master equation.

    Split for speed on dense states; every piece is O(dim^2) because the
    models here are built from ladder-operator polynomials with O(dim)
    nonzeros:

    * the non-Hermitian K(t) = H(t) - (i/2) sum rate L^dag L enters as
      -i(K rho - (K rho)^dag) with K and the drive quadratures in CSR;
    * diagonal jump operators (dephasing channels) reduce to a single
      precomputed elementwise weight, D[L] rho = W * rho with
      W_jk = rate (L_j L_k* - |L_j|^2/2 - |L_k|^2/2);
    * remaining recycling terms L rho L^dag go through sparse matmuls.
    """

    def __init__(self, model: LindbladModel):
        n = model.dim
        self.n = n
        k0 = np.zeros((n, n), dtype=np.complex128)
        if model.h0 is not None:
            k0 += _entries(model.h0)
        self.diag_weight = None
        self.jumps = []
        for rate, op in model.dissipators:
            if rate == 0.0:
                continue
            L = _entries(op)
            off_diag = np.max(np.abs(L - np.diag(np.diag(L)))) if n > 1 else 0.0
            if off_diag == 0.0:
                d = np.diag(L)
                w = rate * (np.outer(d, d.conj()) - 0.5 * (np.abs(d) ** 2)[:, None] - 0.5 * (np.abs(d) ** 2)[None, :])
                self.diag_weight = w if self.diag_weight is None else self.diag_weight + w
            else:
                k0 += -0.5j * rate * (L.conj().T @ L)
                Ls = sp.csr_matrix(L)
                self.jumps.append((rate, Ls))
        # ladder-polynomial Hamiltonians are sparse; CSR keeps K rho at O(dim^2)
        self.k0 = sp.csr_matrix(k0)
        self.drives = [
            (f, sp.csr_matrix(_entries(op)), sp.csr_matrix(_entries(op)).conj().T.tocsr())
            for f, op in model.drives
        ]

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        a = self.k0 @ rho
        for f, b, bdag in self.drives:
            ft = complex(f(t))
            if ft != 0.0:
                a += ft * (b @ rho)
                a += np.conj(ft) * (bdag @ rho)
        out = -1j * (a - a.conj().T)
        for rate, L in self.jumps:
            j = L @ rho
            out += rate * (L @ j.conj().T)
        if self.diag_weight is not None:
            out += self.diag_weight * rho
        return out


def _gershgorin_bound(mat: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(mat), axis=1)))


def suggest_dt(
    model: LindbladModel,
    dt_max: float,
    t_span: tuple[float, float] | None = None,
    z_bound: float = 1.5,
) -> float:
    """Largest step <= dt_max keeping RK4 inside its stability region.

    The stiff scales come from the truncation edge: a jump operator L decays
    the top Fock corner at rate ~ rate * lambda_max(L^dag L), which for
    kappa2 D[m^2] grows like dim^2 and quickly outruns any fixed default.
    Bounds via Gershgorin (cheap overestimates); drive envelopes are sampled
    on a 256-point grid over ``t_span``.
    """
    bound = 0.0
    if model.h0 is not None:
        bound += 2.0 * _gershgorin_bound(_entries(model.h0))
    for f, op in model.drives:
        lo, hi = t_span if t_span is not None else (0.0, 1000.0)
        ts = np.linspace(lo, hi, 257)
        fmax = max(abs(complex(f(t))) for t in ts)
        bound += 4.0 * fmax * _gershgorin_bound(_entries(op))
    for rate, op in model.dissipators:
        if rate == 0:
            continue
        L = _entries(op)
        bound += rate * _gershgorin_bound(L.conj().T @ L)
    if bound <= 0:
        return dt_max
    return float(min(dt_max, z_bound / bound))


def evolve(
    model: LindbladModel,
    rho0: DensityMatrix,
    t_span: tuple[float, float],
    dt: float,
    record: dict[str, Operator] | None = None,
    store_states: bool = True,
    state_decimation: int = 10,
    record_decimation: int = 1,
    trace_error: float = DEFAULT_TRACE_ERROR,
) -> Trajectory:
    """Integrate the model from t_span[0] to t_span[1] with fixed-step RK4.

    The state is re-Hermitized each step.  Raises StepSizeError when
    |Tr rho - 1| exceeds ``trace_error`` and DivergenceError on non-finite
    entries.  ``record`` maps names to observables, evaluated every
    ``record_decimation`` steps; states are kept every ``state_decimation``
    steps (endpoints always included).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if rho0.dims != tuple(model.dims):
        raise DimensionError(f"state dims {rho0.dims} do not match model dims {model.dims}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    span = t1 - t0
    if span < 0:
        raise ValueError("t_span must be increasing")

    n_steps = max(1, int(round(span / dt))) if span > 0 else 0
    h = span / n_steps if n_steps else 0.0
    rhs = _Rhs(model)
    # Tr(O rho) = vec(O^T) . vec(rho)
    obs = {name: _entries(op).T.ravel().copy() for name, op in (record or {}).items()}

    rho = rho0.entries.astype(np.complex128, copy=True)
    times = [t0]
    values: dict[str, list[complex]] = {
        name: [complex(o @ rho.ravel())] for name, o in obs.items()
    }
    states: list[DensityMatrix] = []
    state_times = []
    if store_states:
        states.append(DensityMatrix(model.dims, rho.copy(), validate=False))
        state_times.append(t0)

    for step in range(1, n_steps + 1):
        t = t0 + (step - 1) * h
        k1 = rhs(t, rho)
        k2 = rhs(t + 0.5 * h, rho + (0.5 * h) * k1)
        k3 = rhs(t + 0.5 * h, rho + (0.5 * h) * k2)
        k4 = rhs(t + h, rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)

        tr = np.trace(rho).real
        if not np.isfinite(tr):
            raise DivergenceError(f"non-finite state at t={t + h:.3f} ns; reduce dt")
        if abs(tr - 1.0) > trace_error:
            raise StepSizeError(
                f"trace drift {abs(tr - 1.0):.2e} at t={t + h:.3f} ns exceeds "
                f"{trace_error}; reduce dt below {h} ns"
            )

        at_end = step == n_steps
        if step % record_decimation == 0 or at_end:
            times.append(t0 + step * h)
            for name, o in obs.items():
                values[name].append(complex(o @ rho.ravel()))
        if store_states and (step % state_decimation == 0 or at_end):
            states.append(DensityMatrix(model.dims, rho.copy(), validate=False))
            state_times.append(t0 + step * h)

    return Trajectory(
        times=np.asarray(times),
        records={name: np.asarray(v) for name, v in values.items()},
        states=states,
        state_times=np.asarray(state_times) if store_states else None,
    )


def steady_state_reached(
    traj: Trajectory, record_name: str, window: float, tol: float
) -> bool:
    """True iff the named record varies by less than ``tol`` over the trailing
    ``window`` ns (real and imaginary parts checked separately)."""
    if record_name not in traj.records:
        raise KeyError(f"record {record_name!r} not in trajectory")
    values = traj.records[record_name]
    if values.size == 0:
        raise ValueError("empty record")
    t_end = traj.times[-1]
    if window > t_end - traj.times[0]:
        raise ValueError("window longer than the trajectory")
    mask = traj.times >= t_end - window
    tail = values[mask]
    spread_re = np.ptp(tail.real)
    spread_im = np.ptp(tail.imag) if np.iscomplexobj(tail) else 0.0
    return bool(spread_re < tol and spread_im < tol)
