import numpy as np
import pytest

from catsim.device import build_reduced_model
from catsim.errors import StepSizeError
from catsim.fock import (
    DensityMatrix,
    Operator,
    annihilation_op,
    cat_state,
    fock_state,
    number_op,
    parity_op,
)
from catsim.lindblad import (
    LindbladModel,
    dissipator_apply,
    evolve,
    steady_state_reached,
    suggest_dt,
)


def test_dissipator_single_photon_decay_generator():
    a = annihilation_op(3)
    rho = fock_state(3, 1).to_density_matrix()
    out = dissipator_apply(a, 1.0, rho)
    expected = np.zeros((3, 3))
    expected[0, 0] = 1.0
    expected[1, 1] = -1.0
    assert np.max(np.abs(out - expected)) < 1e-14
    assert abs(np.trace(out)) < 1e-12


def test_dephasing_preserves_populations():
    n = number_op(5)
    rho = np.diag([0.4, 0.3, 0.2, 0.1, 0.0]).astype(complex)
    out = dissipator_apply(n, 0.3, DensityMatrix((5,), rho, validate=False))
    assert np.max(np.abs(out)) < 1e-14


def test_two_photon_generator_preserves_parity():
    dim = 30
    a2 = annihilation_op(dim) @ annihilation_op(dim)
    rho = cat_state(dim, 2.0, "+").to_density_matrix()
    out = dissipator_apply(a2, 1.0, rho)
    p = parity_op(dim).entries
    assert abs(np.trace(p @ out)) < 1e-10


def test_free_evolution_is_constant():
    rho0 = fock_state(4, 2).to_density_matrix()
    traj = evolve(LindbladModel(dims=(4,)), rho0, (0, 100), 1.0, store_states=True)
    assert np.max(np.abs(traj.final_state().entries - rho0.entries)) < 1e-12


def test_rabi_oscillation_analytic():
    omega = 0.05
    h = Operator((2,), omega / 2 * np.array([[0, 1], [1, 0]], dtype=complex))
    model = LindbladModel(dims=(2,), h0=h)
    pe = Operator((2,), np.diag([0.0, 1.0]).astype(complex))
    traj = evolve(model, fock_state(2, 0).to_density_matrix(), (0, 400), 0.25, record={"pe": pe})
    expected = np.sin(omega * traj.times / 2) ** 2
    assert np.max(np.abs(traj.records["pe"].real - expected)) < 1e-7


def test_single_photon_lifetime_matches_table(params):
    # kappa1/2pi = 14 kHz -> 1/e time 1/(2 pi 14 kHz) = 11.37 us
    dim = 6
    model = LindbladModel(dims=(dim,), dissipators=[(params.kappa1, annihilation_op(dim))])
    p1 = Operator((dim,), np.diag([0, 1, 0, 0, 0, 0]).astype(complex))
    t_e = 1.0 / params.kappa1
    assert t_e == pytest.approx(11368.2, rel=1e-4)
    traj = evolve(model, fock_state(dim, 1).to_density_matrix(), (0, t_e), 10.0, record={"p1": p1})
    assert traj.records["p1"][-1].real == pytest.approx(np.exp(-1), abs=1e-6)


def test_trace_and_positivity_along_stabilization(ideal_params):
    dim = 25
    model = build_reduced_model(ideal_params, alpha_target=2.0, dims=(dim,))
    dt = suggest_dt(model, 1.0)
    traj = evolve(
        model, fock_state(dim, 0).to_density_matrix(), (0, 800), dt,
        store_states=True, state_decimation=2000,
    )
    for state in traj.states:
        assert abs(state.trace() - 1.0) <= 1e-6
        assert state.min_eigenvalue() >= -1e-6


def test_fourth_order_convergence_dt_halving(ideal_params):
    dim = 18
    model = build_reduced_model(ideal_params, alpha_target=1.5, dims=(dim,))
    dt = suggest_dt(model, 1.0)
    kw = dict(record={"n": number_op(dim)}, store_states=False, record_decimation=10**9)
    t1 = evolve(model, fock_state(dim, 0).to_density_matrix(), (0, 300), dt, **kw)
    t2 = evolve(model, fock_state(dim, 0).to_density_matrix(), (0, 300), dt / 2, **kw)
    assert abs(t1.records["n"][-1] - t2.records["n"][-1]) <= 1e-5


def test_step_size_error_on_unstable_dt(ideal_params):
    dim = 30
    model = build_reduced_model(ideal_params, alpha_target=2.0, dims=(dim,))
    with pytest.raises(StepSizeError):
        evolve(model, fock_state(dim, 0).to_density_matrix(), (0, 100), 1.0)


def test_suggest_dt_respects_cap():
    model = LindbladModel(dims=(4,))
    assert suggest_dt(model, 2.0) == 2.0


def test_steady_state_reached_on_records():
    from catsim.lindblad import Trajectory

    times = np.linspace(0, 1000, 101)
    traj = Trajectory(times=times, records={"c": np.ones(101, dtype=complex),
                                            "ramp": times.astype(complex)})
    assert steady_state_reached(traj, "c", 200, 1e-6)
    assert not steady_state_reached(traj, "ramp", 200, 1e-3)
    with pytest.raises(KeyError):
        steady_state_reached(traj, "missing", 200, 1e-3)


def test_steady_state_of_two_photon_stabilization(ideal_params):
    dim = 25
    model = build_reduced_model(ideal_params, alpha_target=2.0, dims=(dim,))
    dt = suggest_dt(model, 1.0)
    traj = evolve(
        model, fock_state(dim, 0).to_density_matrix(), (0, 1500), dt,
        record={"n": number_op(dim)}, store_states=False,
        record_decimation=max(1, int(round(10 / dt))),
    )
    assert steady_state_reached(traj, "n", 200.0, 1e-3)


def test_parity_conserved_under_pure_two_photon_dissipation(ideal_params):
    dim = 25
    model = build_reduced_model(ideal_params, alpha_target=2.0, dims=(dim,))
    dt = suggest_dt(model, 1.0)
    traj = evolve(
        model, cat_state(dim, 2.0, "+").to_density_matrix(), (0, 500), dt,
        record={"parity": parity_op(dim)}, store_states=False,
        record_decimation=100,
    )
    drift = np.max(np.abs(traj.records["parity"].real - traj.records["parity"][0].real))
    assert drift <= 1e-6


def test_record_grid_matches_times():
    model = LindbladModel(dims=(3,))
    traj = evolve(
        model, fock_state(3, 0).to_density_matrix(), (0, 10), 1.0,
        record={"n": number_op(3)}, record_decimation=3,
    )
    assert traj.times[0] == 0.0 and traj.times[-1] == 10.0
    assert len(traj.records["n"]) == len(traj.times)
    assert np.all(np.diff(traj.times) > 0)
