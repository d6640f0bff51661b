"""Transient squeezing of a cat state when the buffer drive is quenched.

With the drive off but the two-to-one exchange still active, the memory
pumps the buffer to a mean amplitude proportional to alpha^2, which reflects
back as an effective squeezing Hamiltonian g2 <b> m^dag2 + h.c. on the
memory.  The semiclassical amplitudes obey

    dm/dt     = -2i g2 gamma m*
    dgamma/dt = -(kappa_b/2) gamma - i g2 m^2

with m(0) = alpha, gamma(0) = 0, and the squeezing parameter accumulates as
r(t) = 2i g2 int_0^t gamma, consistent with m(t) = alpha e^{-r(t)}.  At short
times r(t) = g2^2 alpha^2 t^2 (1 - kappa_b t / 6) + O(t^4).

Squeezing is quoted in dB as 10 log10(sigma_vac^2 / sigma_min^2) with
sigma_vac^2 = 1/4 in the x = Re(beta) Wigner convention, i.e.
10 log10(e^{2r}) = 8.686 r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .device import (
    MHZ_TO_RAD_NS,
    DeviceParams,
    build_bipartite_model,
    drive_amplitude_for,
)
from .errors import FitError, StepSizeError
from .fock import DensityMatrix, cat_state, fock_state, partial_trace
from .lindblad import evolve, suggest_dt
from .wigner import WignerMap

__all__ = [
    "AmplitudeTrace",
    "integrate_amplitudes",
    "r_taylor",
    "simulate_squeezed_cat",
    "simulate_squeezed_cat_sweep",
    "extract_squeezing_db",
    "fitted_covariance",
    "DB_PER_UNIT_R",
]

DB_PER_UNIT_R = 10.0 / np.log(10.0) * 2.0  # 10 log10(e^{2r}) = 8.686 r


@dataclass
class AmplitudeTrace:
    """Semiclassical memory/buffer amplitudes and accumulated squeezing."""

    times: np.ndarray
    m_amp: np.ndarray
    gamma_amp: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.m_amp = np.asarray(self.m_amp, dtype=np.complex128)
        self.gamma_amp = np.asarray(self.gamma_amp, dtype=np.complex128)
        self.r = np.asarray(self.r, dtype=float)

    def to_csv(self, path, metadata: dict | None = None) -> None:
        with open(path, "w") as fh:
            for key, val in (metadata or {}).items():
                fh.write(f"# {key}: {val}\n")
            fh.write("t,re_m,im_m,re_gamma,im_gamma,r\n")
            for t, m, g, r in zip(self.times, self.m_amp, self.gamma_amp, self.r):
                fh.write(f"{float(t)!r},{float(m.real)!r},{float(m.imag)!r},{float(g.real)!r},{float(g.imag)!r},{float(r)!r}\n")


def _amplitude_rhs(g2: float, kappa_b: float):
    def rhs(y):
        m, gamma, _ = y
        dm = -2j * g2 * gamma * np.conj(m)
        dgamma = -0.5 * kappa_b * gamma - 1j * g2 * m * m
        dr = 2j * g2 * gamma
        return np.array([dm, dgamma, dr])

    return rhs


def _integrate(g2, kappa_b, alpha, t_span, dt):
    t0, t1 = t_span
    n_steps = max(1, int(round((t1 - t0) / dt)))
    h = (t1 - t0) / n_steps
    rhs = _amplitude_rhs(g2, kappa_b)
    y = np.array([complex(alpha), 0.0j, 0.0j])
    times = [t0]
    out = [y.copy()]
    for step in range(n_steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        times.append(t0 + (step + 1) * h)
        out.append(y.copy())
    arr = np.array(out)
    return np.array(times), arr[:, 0], arr[:, 1], arr[:, 2]


def integrate_amplitudes(
    g2_over_2pi: float,
    kappa_b_over_2pi: float,
    alpha: complex,
    t_span: tuple[float, float] = (0.0, 30.0),
    dt: float | None = None,
) -> AmplitudeTrace:
    """RK4 integration of the amplitude ODEs (rates in /2pi MHz, time in ns).

    The squeezing parameter is accumulated as a third ODE component; the
    representation identity m(t) = alpha e^{-r(t)} holds to 1e-6 relative
    and is checked.  Raises StepSizeError when halving dt still moves r by
    more than 1e-5.
    """
    g2 = g2_over_2pi * MHZ_TO_RAD_NS
    kappa_b = kappa_b_over_2pi * MHZ_TO_RAD_NS
    if dt is None:
        dt = 0.02 / kappa_b if kappa_b > 0 else 0.01
    times, m, gamma, r = _integrate(g2, kappa_b, alpha, t_span, dt)
    _, _, _, r_half = _integrate(g2, kappa_b, alpha, t_span, dt / 2)
    if abs(r[-1] - r_half[-1]) > 1e-5:
        raise StepSizeError(
            f"amplitude ODE step too coarse: halving dt moves r by "
            f"{abs(r[-1] - r_half[-1]):.2e}"
        )
    r_real = r.real
    if alpha != 0:
        recon = np.abs(alpha * np.exp(-r_real))
        err = np.max(np.abs(np.abs(m) - recon) / np.maximum(np.abs(m), 1e-12))
        if err > 1e-6:
            raise StepSizeError(f"m = alpha e^-r consistency violated at {err:.2e}")
    return AmplitudeTrace(times, m, gamma, r_real)


def r_taylor(g2_over_2pi: float, kappa_b_over_2pi: float, alpha: complex, t: float) -> float:
    """Short-time law r(t) = g2^2 alpha^2 t^2 (1 - kappa_b t / 6)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    g2 = g2_over_2pi * MHZ_TO_RAD_NS
    kappa_b = kappa_b_over_2pi * MHZ_TO_RAD_NS
    return float(g2**2 * abs(alpha) ** 2 * t**2 * (1.0 - kappa_b * t / 6.0))


# ---------------------------------------------------------------------------
# Full bipartite quench
# ---------------------------------------------------------------------------

def _prepared_joint_state(params, alpha, dims, pre_stabilize_ns, dt):
    dim_m, dim_b = dims
    memory = cat_state(dim_m, alpha, "+").to_density_matrix()
    buffer0 = fock_state(dim_b, 0).to_density_matrix()
    joint = DensityMatrix(dims, np.kron(memory.entries, buffer0.entries), validate=False)
    if pre_stabilize_ns <= 0:
        return joint
    model = build_bipartite_model(
        params,
        envelope=drive_amplitude_for(params, alpha),
        dims=dims,
        guard_amplitude=alpha,
    )
    step = suggest_dt(model, dt or 0.1, t_span=(0.0, pre_stabilize_ns))
    traj = evolve(model, joint, (0.0, pre_stabilize_ns), step, store_states=True, state_decimation=10**9)
    return traj.final_state()


def simulate_squeezed_cat(
    params: DeviceParams,
    alpha: float,
    t_off: float,
    dims: tuple[int, int] = (44, 8),
    pre_stabilize_ns: float = 120.0,
    dt: float | None = None,
) -> DensityMatrix:
    """Memory state a time t_off after the buffer drive is quenched.

    The joint system is first stabilized with the drive on (the buffer
    settles into its driven steady state), then evolved with eps_d = 0 while
    the exchange and buffer loss stay active.  Returns the reduced memory
    state.  ``dims`` must cover ~4 alpha^2 photons in the memory; the buffer
    sees a transient displacement of order 2 g2 alpha^2 / kappa_b, so its
    truncation needs more than the in-gate default.
    """
    dim_m, dim_b = dims
    if dim_m < 4 * alpha * alpha:
        raise ValueError(f"memory dim {dim_m} below 4 alpha^2 = {4 * alpha * alpha:.1f}")
    if dim_b < 5:
        raise ValueError("buffer dim must be at least 5")
    joint = _prepared_joint_state(params, alpha, dims, pre_stabilize_ns, dt)
    if t_off > 0:
        model = build_bipartite_model(params, envelope=None, dims=dims, guard_amplitude=alpha)
        step = suggest_dt(model, dt or 0.1, t_span=(0.0, t_off))
        joint = evolve(model, joint, (0.0, t_off), step, store_states=True, state_decimation=10**9).final_state()
    return partial_trace(joint, keep=0)


def simulate_squeezed_cat_sweep(
    params: DeviceParams,
    alpha: float,
    t_offs,
    dims: tuple[int, int] = (44, 8),
    pre_stabilize_ns: float = 120.0,
    dt: float | None = None,
) -> list[DensityMatrix]:
    """Memory states at several quench times, sharing one preparation run."""
    t_offs = sorted(float(t) for t in t_offs)
    joint = _prepared_joint_state(params, alpha, dims, pre_stabilize_ns, dt)
    model = build_bipartite_model(params, envelope=None, dims=dims, guard_amplitude=alpha)
    out = []
    t_prev = 0.0
    for t in t_offs:
        if t > t_prev:
            step = suggest_dt(model, dt or 0.1, t_span=(t_prev, t))
            joint = evolve(model, joint, (t_prev, t), step, store_states=True, state_decimation=10**9).final_state()
            t_prev = t
        out.append(partial_trace(joint, keep=0))
    return out


# ---------------------------------------------------------------------------
# Squeezing extraction from Wigner maps
# ---------------------------------------------------------------------------

def _find_two_peaks(wmap: WignerMap, min_separation: float = 0.8):
    """The two coherent lobes of a (squeezed) cat map.

    A cat's central interference fringe is taller than the lobes, so 'two
    highest maxima' would pair the fringe with one lobe; instead, among the
    strong local maxima, take the pair with the largest separation.
    """
    vals = wmap.values
    ny, nx = vals.shape
    peaks = []
    for i in range(1, ny - 1):
        for j in range(1, nx - 1):
            patch = vals[i - 1 : i + 2, j - 1 : j + 2]
            if vals[i, j] == patch.max() and vals[i, j] > 0.02:
                peaks.append((vals[i, j], wmap.grid_re[j], wmap.grid_im[i]))
    if len(peaks) < 2:
        raise FitError("fewer than two Wigner peaks found")
    peaks.sort(reverse=True)
    strong = [pk for pk in peaks if pk[0] >= 0.15 * peaks[0][0]][:12]
    best_pair, best_sep = None, 0.0
    for a in range(len(strong)):
        for b in range(a + 1, len(strong)):
            sep = math.hypot(strong[a][1] - strong[b][1], strong[a][2] - strong[b][2])
            if sep > best_sep:
                best_sep, best_pair = sep, (strong[a], strong[b])
    if best_pair is None or best_sep < min_separation:
        raise FitError("fewer than two separated Wigner peaks found")
    return best_pair


def _gaussian_pair(params_vec, x, y):
    a1, a2, x1, y1, x2, y2, c11, c21, c22 = params_vec
    # shared covariance through the Cholesky factor of the inverse
    dx1, dy1 = x - x1, y - y1
    dx2, dy2 = x - x2, y - y2
    q1 = (c11 * dx1) ** 2 + (c21 * dx1 + c22 * dy1) ** 2
    q2 = (c11 * dx2) ** 2 + (c21 * dx2 + c22 * dy2) ** 2
    return a1 * np.exp(-0.5 * q1) + a2 * np.exp(-0.5 * q2)


def _marginal_moments(coords, profile, center, width):
    sel = np.abs(coords - center) < width
    w = np.clip(profile[sel], 0, None)
    if w.sum() <= 0:
        raise FitError("empty marginal window")
    c = coords[sel]
    mu = (w * c).sum() / w.sum()
    var = (w * (c - mu) ** 2).sum() / w.sum()
    return mu, math.sqrt(max(var, 1e-6))


def _marginal_two_peaks(coords, profile):
    """Positions of the two most separated strong local maxima of a profile."""
    peaks = []
    for k in range(1, coords.size - 1):
        if profile[k] >= profile[k - 1] and profile[k] >= profile[k + 1]:
            peaks.append((profile[k], coords[k], k))
    if not peaks:
        return None
    vmax = max(p[0] for p in peaks)
    strong = [p for p in peaks if p[0] > 0.15 * vmax]
    best, sep = None, 0.0
    for a in range(len(strong)):
        for b in range(a + 1, len(strong)):
            d = abs(strong[a][1] - strong[b][1])
            if d > sep:
                sep, best = d, (strong[a], strong[b])
    return best, sep


def _fit_windows(wmap: WignerMap, window_sigmas: float):
    """Fit points (ellipses around the two lobes, fringe band excluded) and a
    deterministic start vector.

    The lobe geometry comes from the marginal of W along each grid axis:
    integrating across the fringe direction cancels the oscillatory
    interference term, leaving two clean Gaussians, so the axis whose
    marginal shows the wider two-peak separation is the lobe axis.  This is
    immune to fringe maxima out-peaking the lobes on the 2D map.  The lobe
    axis must lie near a grid axis (real or imaginary), which holds for
    every state this module produces.
    """
    dre = float(np.mean(np.diff(wmap.grid_re)))
    dim_ = float(np.mean(np.diff(wmap.grid_im)))
    # no clipping: in the plain sums the oscillatory fringe term cancels
    marg_re = wmap.values.sum(axis=0) * dim_
    marg_im = wmap.values.sum(axis=1) * dre
    cand_re = _marginal_two_peaks(wmap.grid_re, marg_re)
    cand_im = _marginal_two_peaks(wmap.grid_im, marg_im)
    sep_re = cand_re[1] if cand_re and cand_re[0] else 0.0
    sep_im = cand_im[1] if cand_im and cand_im[0] else 0.0
    if max(sep_re, sep_im) < 0.8:
        raise FitError("fewer than two separated Wigner lobes found")
    along_re = sep_re >= sep_im
    if along_re:
        s_grid, p_grid, vals, marg = wmap.grid_re, wmap.grid_im, wmap.values, marg_re
        pk1, pk2 = cand_re[0]
    else:
        s_grid, p_grid, vals, marg = wmap.grid_im, wmap.grid_re, wmap.values.T, marg_im
        pk1, pk2 = cand_im[0]
    ds = float(np.mean(np.diff(s_grid)))
    half_sep = 0.5 * abs(pk1[1] - pk2[1])

    mu1, sig_s = _marginal_moments(s_grid, marg, pk1[1], 0.7 * half_sep)
    mu1, sig_s = _marginal_moments(s_grid, marg, mu1, 2.5 * sig_s)
    mu2, _ = _marginal_moments(s_grid, marg, pk2[1], 2.5 * sig_s)

    # transverse width from a strip through the first lobe
    strip = np.abs(s_grid - mu1) < 1.5 * sig_s
    perp_profile = np.clip(vals[:, strip], 0, None).sum(axis=1) * ds
    mu_p, sig_p = _marginal_moments(p_grid, perp_profile, p_grid[np.argmax(perp_profile)], np.inf)

    if half_sep < 2.2 * sig_s:
        raise FitError("lobes not resolved against the interference fringes")

    ss, pp = np.meshgrid(s_grid, p_grid)
    in_lobes = (((ss - mu1) / (3.0 * sig_s)) ** 2 + ((pp - mu_p) / (3.5 * sig_p)) ** 2 < 1) | (
        ((ss - mu2) / (3.0 * sig_s)) ** 2 + ((pp - mu_p) / (3.5 * sig_p)) ** 2 < 1
    )
    # the interference envelope shares the squeezed width sigma_s, so stay
    # at least ~3 sigma_s away from the midpoint even when the lobes are close
    mid = 0.5 * (mu1 + mu2)
    cut = max(half_sep - 2.0 * sig_s, 2.9 * sig_s)
    mask = in_lobes & (np.abs(ss - mid) > cut)
    fs, fp, fv = ss[mask], pp[mask], vals[mask]
    if fs.size < 20:
        raise FitError("too few grid points in the peak windows; refine the grid")

    i_p = int(np.argmin(np.abs(p_grid - mu_p)))
    v1 = float(vals[i_p, int(np.argmin(np.abs(s_grid - mu1)))])
    v2 = float(vals[i_p, int(np.argmin(np.abs(s_grid - mu2)))])
    if along_re:
        fx, fy = fs, fp
        p0 = np.array([v1, v2, mu1, mu_p, mu2, mu_p, 1.0 / sig_s, 0.0, 1.0 / sig_p])
    else:
        fx, fy = fp, fs
        p0 = np.array([v1, v2, mu_p, mu1, mu_p, mu2, 1.0 / sig_p, 0.0, 1.0 / sig_s])
    return fx, fy, fv, p0


def extract_squeezing_db(
    wmap: WignerMap,
    rng_seed: int = 0,
    n_bootstrap: int = 50,
    window_sigmas: float = 5.0,
) -> tuple[float, float]:
    """Fit the two dominant Wigner lobes with Gaussians of shared covariance.

    Returns (squeezing_dB, bootstrap uncertainty): 10 log10(sigma_vac^2 /
    sigma_min^2) with sigma_vac^2 = 1/4.  The fit runs on windows around the
    two peaks (Levenberg-Marquardt, moment-based deterministic start); the
    uncertainty is the standard deviation over residual-bootstrap refits with
    a fixed seed.
    """
    fx, fy, fv, p0 = _fit_windows(wmap, window_sigmas)

    def resid(pv):
        return _gaussian_pair(pv, fx, fy) - fv

    fit = least_squares(resid, p0, method="lm", max_nfev=20000)
    if not fit.success:
        raise FitError(f"Gaussian peak fit did not converge: {fit.message}")

    def db_from(pv):
        c11, c21, c22 = pv[6], pv[7], pv[8]
        cmat = np.array([[c11, 0.0], [c21, c22]])
        inv_cov = cmat.T @ cmat
        cov = np.linalg.inv(inv_cov)
        smin = float(np.linalg.eigvalsh(cov).min())
        return 10.0 * math.log10(0.25 / smin), cov

    db, cov = db_from(fit.x)
    rng = np.random.default_rng(rng_seed)
    res = resid(fit.x)
    boot = []
    for _ in range(n_bootstrap):
        synth = _gaussian_pair(fit.x, fx, fy) - rng.choice(res, size=res.size, replace=True)
        refit = least_squares(lambda pv: _gaussian_pair(pv, fx, fy) - synth, fit.x, method="lm", max_nfev=5000)
        if refit.success:
            boot.append(db_from(refit.x)[0])
    unc = float(np.std(boot)) if len(boot) > 2 else float("nan")
    return float(db), unc


def fitted_covariance(wmap: WignerMap, window_sigmas: float = 5.0) -> np.ndarray:
    """Shared 2x2 covariance of the two-lobe Gaussian fit (for diagnostics)."""
    fx, fy, fv, p0 = _fit_windows(wmap, window_sigmas)
    fit = least_squares(lambda pv: _gaussian_pair(pv, fx, fy) - fv, p0, method="lm", max_nfev=20000)
    if not fit.success:
        raise FitError(f"Gaussian peak fit did not converge: {fit.message}")
    c11, c21, c22 = fit.x[6], fit.x[7], fit.x[8]
    cmat = np.array([[c11, 0.0], [c21, c22]])
    return np.linalg.inv(cmat.T @ cmat)
