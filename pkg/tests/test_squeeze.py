import math

import numpy as np
import pytest

from catsim.errors import FitError, StepSizeError
from catsim.fock import PureState, coherent_state, fock_state, squeeze_op
from catsim.squeeze import (
    DB_PER_UNIT_R,
    extract_squeezing_db,
    fitted_covariance,
    integrate_amplitudes,
    r_taylor,
    simulate_squeezed_cat,
    simulate_squeezed_cat_sweep,
)
from catsim.wigner import wigner_map

G2, KB, ALPHA = 6.2, 40.0, 2.9  # /2pi MHz, /2pi MHz, dimensionless


def _squeezed_cat_map(r, alpha=2.0, dim=44):
    s = squeeze_op(dim, r).entries
    v = s @ coherent_state(dim, alpha).amplitudes + s @ coherent_state(dim, -alpha).amplitudes
    v = v / np.linalg.norm(v)
    g_re = np.linspace(-3.6, 3.6, 121)
    g_im = np.linspace(-2.6, 2.6, 81)
    return wigner_map(PureState((dim,), v).to_density_matrix(), g_re, g_im)


def test_zero_alpha_trivial():
    tr = integrate_amplitudes(G2, KB, 0.0, (0, 10))
    assert np.max(np.abs(tr.m_amp)) == 0.0
    assert np.max(np.abs(tr.gamma_amp)) == 0.0
    assert np.max(np.abs(tr.r)) == 0.0


def test_taylor_trivials():
    assert r_taylor(G2, KB, ALPHA, 0.0) == 0.0
    # quadratic leading term: r(2t)/r(t) -> 4
    ratio = r_taylor(G2, KB, ALPHA, 0.02) / r_taylor(G2, KB, ALPHA, 0.01)
    assert ratio == pytest.approx(4.0, abs=0.01)
    with pytest.raises(ValueError):
        r_taylor(G2, KB, ALPHA, -1.0)


def test_taylor_reference_point():
    # g2/2pi = 6.2 MHz, kappa_b/2pi = 40 MHz, alpha = 2.9, t = 2 ns (frozen arithmetic)
    assert r_taylor(G2, KB, ALPHA, 2.0) == pytest.approx(0.046774, abs=1e-5)
    tr = integrate_amplitudes(G2, KB, ALPHA, (0, 2.0))
    assert abs(tr.r[-1] - r_taylor(G2, KB, ALPHA, 2.0)) / tr.r[-1] < 0.03


def test_taylor_validity_window():
    # within 5% relative for t <= 0.5/kappa_b (= 2 ns at these parameters)
    for t in (0.5, 1.0, 1.5, 2.0):
        tr = integrate_amplitudes(G2, KB, ALPHA, (0, t))
        assert abs(tr.r[-1] - r_taylor(G2, KB, ALPHA, t)) / tr.r[-1] <= 0.05


def test_amplitude_reality_structure():
    # real alpha: m stays real, gamma stays imaginary
    tr = integrate_amplitudes(G2, KB, ALPHA, (0, 30))
    assert np.max(np.abs(tr.m_amp.imag)) < 1e-9
    assert np.max(np.abs(tr.gamma_amp.real)) < 1e-9
    assert tr.m_amp[0] == pytest.approx(ALPHA)
    assert tr.gamma_amp[0] == 0.0


def test_memory_amplitude_decays_monotonically():
    tr = integrate_amplitudes(G2, KB, ALPHA, (0, 60))
    mags = np.abs(tr.m_amp)
    assert np.all(np.diff(mags) <= 1e-12)
    assert mags[-1] < 0.4 * ALPHA


def test_representation_identity():
    tr = integrate_amplitudes(G2, KB, ALPHA, (0, 20))
    recon = ALPHA * np.exp(-tr.r)
    err = np.max(np.abs(np.abs(tr.m_amp) - recon) / np.abs(tr.m_amp))
    assert err < 1e-6


def test_step_too_coarse_flagged():
    with pytest.raises(StepSizeError):
        integrate_amplitudes(G2, KB, ALPHA, (0, 20), dt=2.0)


def test_amplitude_csv(tmp_path):
    tr = integrate_amplitudes(G2, KB, ALPHA, (0, 5))
    path = tmp_path / "amp.csv"
    tr.to_csv(path, metadata={"run": "test"})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "t,re_m,im_m,re_gamma,im_gamma,r"


def test_extraction_unsqueezed_cat():
    db, unc = extract_squeezing_db(_squeezed_cat_map(0.0))
    assert abs(db) <= 0.1


def test_extraction_known_squeezing():
    # analytic ground truth: r = 0.3 recovered within 5% of 8.686 r
    db, unc = extract_squeezing_db(_squeezed_cat_map(0.3))
    assert abs(db - DB_PER_UNIT_R * 0.3) / (DB_PER_UNIT_R * 0.3) < 0.05
    assert unc < 0.2
    db, _ = extract_squeezing_db(_squeezed_cat_map(0.45))
    assert abs(db - DB_PER_UNIT_R * 0.45) / (DB_PER_UNIT_R * 0.45) < 0.05


def test_extraction_orientation_real_axis():
    cov = fitted_covariance(_squeezed_cat_map(0.35))
    lam, vec = np.linalg.eigh(cov)
    axis = vec[:, 0]  # smallest-variance direction
    assert abs(axis[0]) > 0.99  # along Re(beta)


def test_extraction_needs_two_peaks():
    axis = np.linspace(-2, 2, 41)
    wm = wigner_map(fock_state(30, 0).to_density_matrix(), axis, axis)
    with pytest.raises(FitError):
        extract_squeezing_db(wm)


def test_quench_dims_validation(params):
    with pytest.raises(ValueError):
        simulate_squeezed_cat(params, 2.9, 16.0, dims=(20, 8))
    with pytest.raises(ValueError):
        simulate_squeezed_cat(params, 2.9, 16.0, dims=(44, 3))


@pytest.fixture(scope="module")
def appendix_regime_states():
    """Quench sweep in the idealized regime (no Kerr, no memory losses)."""
    from catsim.device import DeviceParams

    ideal = DeviceParams().replace(kappa1_over_2pi=0.0, kappa_phi_m_over_2pi=0.0)
    offs = [0.0, 4.0, 8.0, 12.0]
    # Kerr off: the appendix model keeps only the exchange and buffer loss
    from catsim import squeeze as sq
    from catsim.device import build_bipartite_model
    from catsim.fock import DensityMatrix, cat_state, fock_state, partial_trace
    from catsim.lindblad import evolve, suggest_dt

    dims = (44, 8)
    joint = DensityMatrix(
        dims,
        np.kron(cat_state(44, 2.9, "+").to_density_matrix().entries,
                fock_state(8, 0).to_density_matrix().entries),
        validate=False,
    )
    model = build_bipartite_model(ideal, envelope=None, dims=dims,
                                  include_kerr=False, guard_amplitude=2.9)
    states, t_prev = [], 0.0
    for t in offs:
        if t > t_prev:
            dt = suggest_dt(model, 0.1, t_span=(t_prev, t))
            joint = evolve(model, joint, (t_prev, t), dt,
                           store_states=True, state_decimation=10**9).final_state()
            t_prev = t
        states.append(partial_trace(joint, keep=0))
    return offs, states


def test_variance_product_near_vacuum_in_appendix_regime(appendix_regime_states):
    """The uncertainty product stays near the vacuum value while the state is
    a resolved two-lobe squeezed cat; at later times two-photon dissipation
    rounds the lobes and the product grows (the rounding caveat), so the 25%
    band is checked over the early window."""
    offs, states = appendix_regime_states
    gr = np.linspace(-3.6, 3.6, 91)
    gi = np.linspace(-2.6, 2.6, 61)
    vac_product = 0.25 * 0.25
    for t, st in zip(offs, states):
        if t not in (4.0, 8.0):
            continue
        cov = fitted_covariance(wigner_map(st, gr, gi))
        product = float(np.prod(np.linalg.eigvalsh(cov)))
        assert abs(product - vac_product) / vac_product <= 0.25, f"t={t}"


def test_quench_squeezes_in_appendix_regime(appendix_regime_states):
    offs, states = appendix_regime_states
    gr = np.linspace(-3.6, 3.6, 91)
    gi = np.linspace(-2.6, 2.6, 61)
    dbs = {}
    for t, st in zip(offs, states):
        try:
            dbs[t], _ = extract_squeezing_db(wigner_map(st, gr, gi))
        except FitError:
            dbs[t] = float("nan")
    assert dbs[8.0] > 2.0
    assert dbs[8.0] > dbs[4.0] > 0.3
