"""Cat-qubit gates: holonomic X(theta), Zeno Y(theta), driven Z(theta).

The buffer drive for the holonomic gate ramps |eps_d| from the stabilization
value to zero (deflation into span(|0>,|1>)) and back up with an extra phase
2*theta (re-inflation into the rotated manifold), followed by a virtual
phase-space rotation R(-theta).  The drive edge is Gaussian with standard
deviation sigma over each half of duration tau, plus a 100 ns stabilization
tail appended after 2*tau.

Two simulation paths:

* bipartite (reference): the full memory-buffer master equation with Kerr
  terms, exchange g2 and buffer loss kappa_b;
* reduced (fast): the adiabatically eliminated memory-only model where the
  drive enters as a time-dependent target alpha^2(t) = -eps_d(t)/g2* inside
  L2 = sqrt(kappa2) (m^2 - alpha^2(t)).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .device import DeviceParams, build_bipartite_model, build_reduced_model, drive_amplitude_for
from .errors import CatsimError, DimensionError
from .fock import DensityMatrix, coherent_state, fock_state, partial_trace
from .lindblad import evolve, suggest_dt
from .reconstruct import logical_basis, x_gate, trace_distance

__all__ = [
    "PulseEnvelope",
    "gaussian_edge_envelope",
    "virtual_rotation",
    "holonomic_x",
    "zeno_y",
    "z_rotation",
    "optimize_pulse",
    "x_gate_target",
]

STABILIZE_TAIL_NS = 100.0


@dataclass(frozen=True)
class PulseEnvelope:
    """Gaussian-edge buffer drive for the holonomic gate.

    eps_d(t) = eps_alpha (e^{-t^2/2sigma^2} - e^{-tau^2/2sigma^2})
               / (1 - e^{-tau^2/2sigma^2})            for 0 <= t <= tau,
    mirrored around tau with prefactor eps_alpha e^{2i theta} for
    tau <= t <= 2 tau, then held at eps_alpha e^{2i theta} for the
    stabilization tail.
    """

    epsilon_alpha: complex
    tau: float
    sigma: float
    theta: float
    stabilize_tail: float = STABILIZE_TAIL_NS

    def __post_init__(self):
        if self.tau <= 0 or self.sigma <= 0:
            raise ValueError("tau and sigma must be positive")

    @property
    def total_duration(self) -> float:
        return 2.0 * self.tau + self.stabilize_tail

    def shape(self, t: float) -> complex:
        """Dimensionless drive shape (1 at the ends, 0 at t = tau)."""
        edge = math.exp(-self.tau**2 / (2.0 * self.sigma**2))
        norm = 1.0 - edge
        if t <= self.tau:
            return (math.exp(-(t**2) / (2.0 * self.sigma**2)) - edge) / norm
        phase = np.exp(2j * self.theta)
        if t <= 2.0 * self.tau:
            return phase * (math.exp(-((2.0 * self.tau - t) ** 2) / (2.0 * self.sigma**2)) - edge) / norm
        return phase

    def __call__(self, t: float) -> complex:
        return self.epsilon_alpha * self.shape(t)


def gaussian_edge_envelope(
    epsilon_alpha: complex,
    tau: float,
    sigma: float,
    theta: float,
    stabilize_tail: float = STABILIZE_TAIL_NS,
) -> PulseEnvelope:
    return PulseEnvelope(epsilon_alpha, tau, sigma, theta, stabilize_tail)


def virtual_rotation(rho: DensityMatrix, theta: float) -> DensityMatrix:
    """Phase-space rotation by conjugation with e^{-i theta n}: |b e^{i theta}> -> |b>."""
    if len(rho.dims) != 1:
        raise DimensionError("virtual_rotation acts on a memory-only state")
    n = np.arange(rho.dim)
    phases = np.exp(-1j * theta * n)
    return DensityMatrix(rho.dims, phases[:, None] * rho.entries * phases.conj()[None, :], validate=False)


def _infer_alpha(rho: DensityMatrix) -> complex:
    """Stabilized amplitude from <m^2> (phase fixed up to the +-alpha sign)."""
    dim = rho.dim
    m = np.zeros((dim, dim), dtype=np.complex128)
    ns = np.arange(1, dim)
    m[ns - 1, ns] = np.sqrt(ns)
    m2 = complex(np.trace(m @ m @ rho.entries))
    return complex(np.sqrt(m2))


def x_gate_target(rho0: DensityMatrix, theta: float, alpha: complex) -> DensityMatrix:
    """Ideal result of the holonomic gate on a logical-subspace state."""
    e_p, e_m = logical_basis(rho0.dim, alpha)
    v = np.column_stack([e_p, e_m])
    rho_l = v.conj().T @ rho0.entries @ v
    rho_l = rho_l / np.trace(rho_l).real
    u = x_gate(theta)
    out = v @ (u @ rho_l @ u.conj().T) @ v.conj().T
    return DensityMatrix(rho0.dims, out, validate=False)


def holonomic_x(
    rho0: DensityMatrix,
    theta: float,
    params: DeviceParams,
    tau: float = 300.0,
    sigma: float = 250.0,
    use_bipartite: bool = True,
    alpha: complex | None = None,
    dims: tuple[int, int] = (40, 5),
    stabilize_tail: float = STABILIZE_TAIL_NS,
    include_kerr: bool = True,
    include_detuning: bool = False,
    dt: float | None = None,
) -> DensityMatrix:
    """Deflate, re-inflate with drive phase 2*theta, apply R(-theta).

    ``rho0`` is the memory state (in or near the alpha-cat manifold);
    ``alpha`` defaults to sqrt(<m^2>) of rho0.  Returns the memory state.
    """
    if alpha is None:
        alpha = _infer_alpha(rho0)
    envelope = gaussian_edge_envelope(drive_amplitude_for(params, alpha), tau, sigma, theta, stabilize_tail)
    span = (0.0, envelope.total_duration)

    if use_bipartite:
        dim_m, dim_b = dims
        if rho0.dim != dim_m:
            raise DimensionError(f"rho0 dim {rho0.dim} != memory dim {dim_m}")
        model = build_bipartite_model(
            params,
            envelope=envelope,
            dims=dims,
            include_kerr=include_kerr,
            include_detuning=include_detuning,
            guard_amplitude=alpha,
        )
        buf = fock_state(dim_b, 0).to_density_matrix()
        joint = np.kron(rho0.entries, buf.entries)
        rho_joint = DensityMatrix((dim_m, dim_b), joint, validate=False)
        step = suggest_dt(model, dt or 0.1, t_span=span)
        traj = evolve(model, rho_joint, span, step, store_states=True, state_decimation=10**9)
        memory = partial_trace(traj.final_state(), keep=0)
    else:
        g2c = np.conj(params.g2)
        model = build_reduced_model(
            params,
            dims=(rho0.dim,),
            alpha2_of_t=lambda t: -envelope(t) / g2c,
            include_detuning=include_detuning,
        )
        step = suggest_dt(model, dt or 1.0, t_span=span)
        traj = evolve(model, rho0, span, step, store_states=True, state_decimation=10**9)
        memory = traj.final_state()
    # the re-inflated manifold sits at alpha e^{i theta}; un-rotate it back
    return virtual_rotation(memory, theta)


def zeno_y(
    rho0: DensityMatrix,
    epsilon_y: float,
    t_rot: float,
    params: DeviceParams,
    alpha: complex | None = None,
    tau: float = 300.0,
    sigma: float = 250.0,
    settle_ns: float = 150.0,
    inflate: bool = True,
    return_deflated: bool = False,
    dt: float | None = None,
):
    """Deflate, drive eps_Y (m + m^dag) under quantum Zeno confinement, inflate.

    The drive is held constant over ``t_rot``; quantum Zeno dynamics confines
    the memory to span(|0>,|1>) as long as |eps_Y| << kappa2 (warned above
    kappa2/10).  Ramps use the same Gaussian edges as the holonomic gate; the
    ramp leaves a transient excitation above |1> that two-photon dissipation
    recycles within a few 1/(2 kappa2), so ``settle_ns`` of drive-free dwell
    at alpha = 0 separates the ramp from the rotation.
    """
    if abs(epsilon_y) > params.kappa2 / 10.0:
        warnings.warn(
            f"|eps_Y| = {abs(epsilon_y):.2e} rad/ns above kappa2/10 = "
            f"{params.kappa2 / 10:.2e}; Zeno confinement degrades",
            stacklevel=2,
        )
    if alpha is None:
        alpha = _infer_alpha(rho0)
    dim = rho0.dim
    g2c = np.conj(params.g2)
    down = gaussian_edge_envelope(drive_amplitude_for(params, alpha), tau, sigma, 0.0, 0.0)

    # deflation ramp: first half of the gate envelope
    model = build_reduced_model(params, dims=(dim,), alpha2_of_t=lambda t: -down(t) / g2c)
    step = suggest_dt(model, dt or 1.0, t_span=(0, tau))
    rho = evolve(model, rho0, (0.0, tau), step, store_states=True, state_decimation=10**9).final_state()

    if settle_ns > 0:
        model = build_reduced_model(params, dims=(dim,), alpha_target=0.0)
        step = suggest_dt(model, dt or 1.0, t_span=(0, settle_ns))
        rho = evolve(model, rho, (0.0, settle_ns), step, store_states=True, state_decimation=10**9).final_state()

    if t_rot > 0:
        model = build_reduced_model(params, dims=(dim,), alpha_target=0.0, memory_drive=float(epsilon_y))
        step = suggest_dt(model, dt or 1.0, t_span=(0, t_rot))
        rho = evolve(model, rho, (0.0, t_rot), step, store_states=True, state_decimation=10**9).final_state()
    deflated = rho

    if inflate:
        up_env = gaussian_edge_envelope(drive_amplitude_for(params, alpha), tau, sigma, 0.0, STABILIZE_TAIL_NS)
        up = lambda t: up_env(t + tau)  # second half: ramp 0 -> eps_alpha, plus tail
        model = build_reduced_model(params, dims=(dim,), alpha2_of_t=lambda t: -up(t) / g2c)
        span = (0.0, tau + STABILIZE_TAIL_NS)
        step = suggest_dt(model, dt or 1.0, t_span=span)
        rho = evolve(model, rho, span, step, store_states=True, state_decimation=10**9).final_state()

    if return_deflated:
        return rho, deflated
    return rho


def z_rotation(
    rho0: DensityMatrix,
    epsilon_z: float,
    duration: float,
    params: DeviceParams,
    alpha: complex | None = None,
    dt: float | None = None,
) -> DensityMatrix:
    """Drive the memory on resonance while L2 stabilizes the cat manifold.

    A rotation Z(theta) accrues between the |+alpha> and |-alpha> populations;
    the speed bound eps_Z < 2 |alpha|^2 kappa2 is warned about, not enforced.
    """
    if alpha is None:
        alpha = _infer_alpha(rho0)
    bound = 2.0 * abs(alpha) ** 2 * params.kappa2
    if abs(epsilon_z) >= bound:
        warnings.warn(
            f"eps_Z = {epsilon_z:.3e} rad/ns exceeds the speed bound "
            f"2 alpha^2 kappa2 = {bound:.3e}",
            stacklevel=2,
        )
    model = build_reduced_model(
        params, dims=(rho0.dim,), alpha_target=alpha, memory_drive=float(epsilon_z)
    )
    step = suggest_dt(model, dt or 1.0, t_span=(0, duration))
    traj = evolve(model, rho0, (0.0, duration), step, store_states=True, state_decimation=10**9)
    return traj.final_state()


# ---------------------------------------------------------------------------
# (tau, sigma) pulse optimization
# ---------------------------------------------------------------------------

def _landscape_cell(args):
    params, alpha, theta, tau, ratio, dims, use_bipartite = args
    sigma = tau / ratio
    dim_m = dims[0]
    rho0 = coherent_state(dim_m, alpha).to_density_matrix()
    target = x_gate_target(rho0, theta, alpha)
    try:
        out = holonomic_x(
            rho0, theta, params, tau=tau, sigma=sigma,
            use_bipartite=use_bipartite, alpha=alpha, dims=dims,
        )
        return trace_distance(out, target), None
    except CatsimError as exc:
        return float("nan"), f"tau={tau} ratio={ratio}: {exc}"


def optimize_pulse(
    params: DeviceParams,
    alpha: float = 2.5,
    theta: float = np.pi / 2,
    tau_grid=(200.0, 250.0, 300.0, 350.0, 400.0, 450.0),
    ratio_grid=(0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0),
    dims: tuple[int, int] = (40, 5),
    use_bipartite: bool = True,
    n_jobs: int = 1,
):
    """Score holonomic_x from |alpha> over a (tau, tau/sigma) grid.

    Returns (tau_star, sigma_star, landscape, errors); the landscape is a
    len(tau_grid) x len(ratio_grid) matrix of trace distances to
    x_gate(theta) |alpha>.  Failed cells are recorded as NaN with an error
    string, not raised.  Cells are independent; ``n_jobs`` > 1 runs them in
    worker processes and merges deterministically by index.
    """
    tau_grid = [float(t) for t in tau_grid]
    ratio_grid = [float(r) for r in ratio_grid]
    if not tau_grid or not ratio_grid:
        raise ValueError("grids must be non-empty")
    cells = [
        (params, alpha, theta, tau, ratio, dims, use_bipartite)
        for tau in tau_grid
        for ratio in ratio_grid
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_landscape_cell, cells))
    else:
        results = [_landscape_cell(c) for c in cells]

    landscape = np.array([r[0] for r in results]).reshape(len(tau_grid), len(ratio_grid))
    errors = [r[1] for r in results if r[1] is not None]
    if np.all(np.isnan(landscape)):
        raise CatsimError(f"every landscape cell failed: {errors[:3]}")
    flat = np.where(np.isnan(landscape), np.inf, landscape)
    i, j = np.unravel_index(int(np.argmin(flat)), landscape.shape)
    tau_star, ratio_star = tau_grid[i], ratio_grid[j]
    return tau_star, tau_star / ratio_star, landscape, errors
