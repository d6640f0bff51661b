import math

import numpy as np
import pytest

from catsim.device import build_reduced_model, drive_amplitude_for
from catsim.fock import DensityMatrix, cat_state, coherent_state, fock_state, number_op
from catsim.gates import (
    PulseEnvelope,
    gaussian_edge_envelope,
    holonomic_x,
    optimize_pulse,
    virtual_rotation,
    x_gate_target,
    z_rotation,
    zeno_y,
)
from catsim.lindblad import evolve, suggest_dt
from catsim.reconstruct import bloch_vector, project_logical, trace_distance


def test_envelope_boundary_constraints():
    env = gaussian_edge_envelope(0.3, 300.0, 250.0, 0.5)
    assert env(0.0) == pytest.approx(0.3)
    assert abs(env(300.0)) < 1e-12
    assert env(600.0) == pytest.approx(0.3 * np.exp(1j), abs=1e-12)
    assert env(650.0) == pytest.approx(0.3 * np.exp(1j), abs=1e-12)  # stabilization tail
    assert env.total_duration == 700.0


def test_envelope_mid_value():
    # (e^{-0.18} - e^{-0.72})/(1 - e^{-0.72}); the formula gives 0.67904
    env = gaussian_edge_envelope(1.0, 300.0, 250.0, 0.0)
    expected = (math.exp(-0.18) - math.exp(-0.72)) / (1 - math.exp(-0.72))
    assert env.shape(150.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.679044, abs=1e-6)


def test_envelope_magnitude_symmetry():
    env = gaussian_edge_envelope(1.0, 280.0, 200.0, 1.1)
    for dt in (30.0, 100.0, 250.0):
        assert abs(env(280.0 - dt)) == pytest.approx(abs(env(280.0 + dt)), abs=1e-12)


def test_envelope_validation():
    with pytest.raises(ValueError):
        PulseEnvelope(1.0, -10.0, 250.0, 0.0)
    with pytest.raises(ValueError):
        PulseEnvelope(1.0, 300.0, 0.0, 0.0)


def test_virtual_rotation_rotates_coherent_state():
    rho = coherent_state(30, 2.0j).to_density_matrix()
    out = virtual_rotation(rho, math.pi / 2)
    target = coherent_state(30, 2.0).to_density_matrix()
    assert np.max(np.abs(out.entries - target.entries)) < 1e-8


def test_virtual_rotation_preserves_populations():
    rho = cat_state(30, 2.0, "+i").to_density_matrix()
    out = virtual_rotation(rho, 0.7)
    assert np.allclose(np.diag(out.entries), np.diag(rho.entries))
    ident = virtual_rotation(rho, 0.0)
    assert np.max(np.abs(ident.entries - rho.entries)) == 0.0


def test_holonomic_round_trip_reduced(ideal_params):
    # theta = 0 returns the input up to a ~4% floor: two-photon jump
    # decoherence while the manifold crosses the low-confinement region
    # (scale-robust: slower pulses and finer steps do not remove it)
    alpha = 2.27
    rho0 = coherent_state(24, -alpha).to_density_matrix()
    out = holonomic_x(rho0, 0.0, ideal_params, use_bipartite=False, alpha=alpha, dims=(24, 5))
    fid = float(np.real(np.trace(out.entries @ rho0.entries)))
    assert fid >= 0.95


def test_holonomic_x_matches_logical_gate_reduced(ideal_params):
    # the physical sequence realizes x_gate(+theta), not x_gate(-theta)
    alpha = 2.27
    rho0 = coherent_state(24, -alpha).to_density_matrix()
    out = holonomic_x(rho0, math.pi / 2, ideal_params, use_bipartite=False, alpha=alpha, dims=(24, 5))
    t_plus = trace_distance(out, x_gate_target(rho0, math.pi / 2, alpha))
    t_minus = trace_distance(out, x_gate_target(rho0, -math.pi / 2, alpha))
    assert t_plus < 0.25
    assert t_minus > 2 * t_plus


def test_holonomic_composition_reduced(ideal_params):
    alpha = 2.0
    rho0 = coherent_state(22, -alpha).to_density_matrix()
    mid = holonomic_x(rho0, 0.8, ideal_params, use_bipartite=False, alpha=alpha, dims=(22, 5))
    back = holonomic_x(mid, -0.8, ideal_params, use_bipartite=False, alpha=alpha, dims=(22, 5))
    fid = float(np.real(np.trace(back.entries @ rho0.entries)))
    # two passes through the low-confinement bottleneck, and the intermediate
    # state carries coherence exposed to two-photon jumps
    assert fid >= 0.80


def test_holonomic_round_trip_bipartite(ideal_params):
    alpha = 2.27
    rho0 = coherent_state(24, -alpha).to_density_matrix()
    out = holonomic_x(rho0, 0.0, ideal_params, use_bipartite=True, alpha=alpha, dims=(24, 5))
    fid = float(np.real(np.trace(out.entries @ rho0.entries)))
    assert fid >= 0.92


def test_trace_distance_band_matches_experiment_scale(params):
    # experiment: T ~ 0.23 at theta = +-pi/2 (including measurement errors);
    # simulation should land below-with-margin but the same order
    alpha = 2.27
    rho0 = coherent_state(24, -alpha).to_density_matrix()
    out = holonomic_x(rho0, math.pi / 2, params, use_bipartite=True, alpha=alpha, dims=(24, 5))
    t = trace_distance(out, x_gate_target(rho0, math.pi / 2, alpha))
    assert 0.1 < t < 0.33


def test_sigma_x_theta_independent(ideal_params):
    thetas = np.linspace(-math.pi, math.pi, 13)
    alpha = 2.27
    rho0 = coherent_state(24, -alpha).to_density_matrix()
    sx = []
    for theta in thetas:
        out = holonomic_x(rho0, theta, ideal_params, use_bipartite=False, alpha=alpha, dims=(24, 5))
        sx.append(bloch_vector(project_logical(out, alpha))[0])
    assert np.std(sx) <= 0.02


def test_sigma_zy_oscillation_and_detuning_shift(params):
    """<sz>(theta) ~ -cos(theta + phi0); adding the 90 kHz detuning shifts the
    curve by ~0.12 rad; <sy> runs pi/2 out of phase with <sz>."""
    thetas = np.linspace(-math.pi, math.pi, 13)
    alpha = 2.27
    rho0 = coherent_state(24, -alpha).to_density_matrix()

    def curves(include_detuning):
        sy, sz = [], []
        for theta in thetas:
            out = holonomic_x(
                rho0, theta, params, use_bipartite=False, alpha=alpha,
                dims=(24, 5), include_detuning=include_detuning,
            )
            _, y, z = bloch_vector(project_logical(out, alpha))
            sy.append(y)
            sz.append(z)
        return np.asarray(sy), np.asarray(sz)

    def phase_of(vals, template):
        # fit vals ~ A cos(theta + phi) via the two quadratures
        c = np.sum(vals * np.cos(thetas)) / np.sum(np.cos(thetas) ** 2)
        s = np.sum(vals * np.sin(thetas)) / np.sum(np.sin(thetas) ** 2)
        return math.atan2(-s, c)

    sy0, sz0 = curves(False)
    assert np.ptp(sz0) > 1.0  # genuine oscillation
    phi_z0 = phase_of(-sz0, None)  # -sz ~ cos(theta)
    phi_y0 = phase_of(-sy0, None)
    rel = (phi_y0 - phi_z0) % (2 * math.pi)
    assert min(abs(rel - math.pi / 2), abs(rel - 3 * math.pi / 2)) < 0.15

    _, sz1 = curves(True)
    phi_z1 = phase_of(-sz1, None)
    shift = abs((phi_z1 - phi_z0 + math.pi) % (2 * math.pi) - math.pi)
    assert shift == pytest.approx(0.12, abs=0.06)


def test_zeno_identity_recovery(ideal_params):
    alpha = 2.0
    rho0 = cat_state(30, alpha, "+").to_density_matrix()
    out = zeno_y(rho0, 0.0, 0.0, ideal_params, alpha=alpha)
    assert out.fidelity_to(cat_state(30, alpha, "+")) >= 0.93  # deflate/inflate passage floor


def test_zeno_deflated_coherence_decay(params):
    """With the measured dephasing, the deflated 0/1 coherence decays at the
    tabulated (Ramsey-measured) rate kappa_phi."""
    nophi = params.replace(kappa1_over_2pi=0.0)
    dim = 12
    amp = np.zeros(dim, dtype=complex)
    amp[0] = amp[1] = 1 / math.sqrt(2)
    from catsim.fock import PureState

    rho = PureState((dim,), amp).to_density_matrix()
    model = build_reduced_model(nophi, alpha_target=0.0, dims=(dim,))
    dt = suggest_dt(model, 1.0)
    traj = evolve(model, rho, (0, 2000.0), dt, store_states=True,
                  state_decimation=int(round(500 / dt)))
    for state, t in zip(traj.states, traj.state_times):
        expected = 0.5 * math.exp(-nophi.kappa_phi_m * t)
        assert abs(state.entries[0, 1]) == pytest.approx(expected, rel=0.05)


def test_zeno_warns_above_bound(ideal_params):
    rho0 = cat_state(24, 2.0, "+").to_density_matrix()
    with pytest.warns(UserWarning, match="Zeno"):
        zeno_y(rho0, ideal_params.kappa2 / 5, 10.0, ideal_params, alpha=2.0, inflate=False)


def test_zeno_rotation_populations(ideal_params):
    # a calibrated-duration drive moves |0> -> |1> through Zeno dynamics
    alpha = 2.0
    eps = math.pi / (2 * 2600.0)
    rho0 = cat_state(30, alpha, "+").to_density_matrix()
    _, deflated = zeno_y(rho0, eps, 2600.0, ideal_params, alpha=alpha, return_deflated=True)
    pops = np.diag(deflated.entries).real
    assert pops[1] > 0.85
    assert pops[1] > 8 * pops[0]


def test_z_rotation_identity(ideal_params):
    alpha = 2.0
    rho0 = cat_state(26, alpha, "+").to_density_matrix()
    out = z_rotation(rho0, 0.0, 200.0, ideal_params, alpha=alpha)
    assert out.fidelity_to(cat_state(26, alpha, "+")) >= 0.98


def test_z_rotation_phase_accrual(ideal_params):
    """Drive splitting between |+-alpha> is 4 eps alpha, so the logical phase
    grows linearly and Z(pi/2) lands at t = pi/(8 eps alpha)."""
    alpha = 2.0
    eps = 0.004
    rate = 4 * eps * alpha
    rho0 = cat_state(26, alpha, "+").to_density_matrix()
    phases = []
    durations = [0.0, 15.0, 30.0, 45.0, 60.0]
    for dur in durations:
        out = z_rotation(rho0, eps, dur, ideal_params, alpha=alpha)
        x, y, z = bloch_vector(project_logical(out, alpha))
        phases.append(math.atan2(y, x))
    phases = np.unwrap(phases)
    slope = np.polyfit(durations, phases, 1)[0]
    assert abs(abs(slope) - rate) / rate < 0.05
    # Z(pi/2): the +x logical state rotates onto +-y
    t_quarter = math.pi / (2 * rate)
    out = z_rotation(rho0, eps, t_quarter, ideal_params, alpha=alpha)
    x, y, z = bloch_vector(project_logical(out, alpha))
    assert abs(y) > 0.9 and abs(x) < 0.15


def test_z_rotation_full_turn(ideal_params):
    alpha = 2.0
    eps = 0.004
    t_full = 2 * math.pi / (4 * eps * alpha)
    rho0 = cat_state(26, alpha, "+").to_density_matrix()
    out = z_rotation(rho0, eps, t_full, ideal_params, alpha=alpha)
    x, y, _ = bloch_vector(project_logical(out, alpha))
    # returns to the +x fringe pattern up to the drive-induced Zeno leakage
    assert x > 0.85 and abs(y) < 0.15


def test_z_rotation_warns_above_speed_bound(ideal_params):
    rho0 = cat_state(26, 2.0, "+").to_density_matrix()
    with pytest.raises(Warning):
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            z_rotation(rho0, 2 * 4 * ideal_params.kappa2 * 4, 1.0, ideal_params, alpha=2.0)


def test_optimize_pulse_degenerate_grid(ideal_params):
    tau, sigma, landscape, errors = optimize_pulse(
        ideal_params, alpha=1.5, theta=math.pi / 2,
        tau_grid=[150.0], ratio_grid=[1.2], dims=(14, 4), use_bipartite=False,
    )
    assert tau == 150.0 and sigma == pytest.approx(125.0)
    assert landscape.shape == (1, 1)
    assert np.isfinite(landscape[0, 0])
    assert errors == []


def test_optimize_pulse_rejects_empty_grid(ideal_params):
    with pytest.raises(ValueError):
        optimize_pulse(ideal_params, tau_grid=[], ratio_grid=[1.0])
