"""
Signal-to-noise analytics for the parity readout and the empirical SNR
extraction from simulated line scans.

Empirical SNR follows the usual DIC step analysis: fit a background level plus
a step response, call the fitted peak height the signal and the scatter of the
counts about the fitted background (far from the step) the noise.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import FitError
from .interference import InterferenceModel, PhotonBudget
from .optics import BeamGeometry, MaterialModel, overlap_xi, phase_to_height, window_weight
from .scan import ScanConfig, ScanRecord, StepProfile, scan_1d

BACKGROUND_THRESHOLD = 0.05


class DegenerateBiasWarning(UserWarning):
    """Raised when an analytic result is a limit rather than a direct evaluation."""


# ---------------------------------------------------------------- analytics


def _fringe_terms(model: InterferenceModel):
    x = model.n_photons * model.bias_phase
    return np.sin(x), 1.0 - model.visibility * np.cos(x)


def snr_analytic(model: InterferenceModel, budget: PhotonBudget, dphi: float) -> float:
    """Small-signal SNR of a differential phase ``dphi`` at the model's bias.

    (1 - xi) sqrt(k/2) N V |sin N bias| / sqrt(1 - V cos N bias) * dphi.
    At V = 1 and zero bias the ratio is 0/0; the bias -> 0 limit is returned
    and a DegenerateBiasWarning is issued.
    """
    N, V, xi, k = model.n_photons, model.visibility, model.overlap, budget.k
    s, d = _fringe_terms(model)
    pre = (1.0 - xi) * np.sqrt(k / 2.0) * N * V * abs(dphi)
    if d <= 1e-15:
        warnings.warn("V = 1 at a dark fringe: returning the bias -> 0 limit",
                      DegenerateBiasWarning, stacklevel=2)
        return float(pre * np.sqrt(2.0))
    if s == 0.0:
        return 0.0
    return float(pre * abs(s) / np.sqrt(d))


def snr_bias_gradient(model: InterferenceModel, budget: PhotonBudget, dphi: float) -> float:
    """d SNR / d bias from the closed form (valid where sin(N bias) != 0)."""
    N, V, xi, k = model.n_photons, model.visibility, model.overlap, budget.k
    x = N * model.bias_phase
    s, c = np.sin(x), np.cos(x)
    d = 1.0 - V * c
    pre = (1.0 - xi) * np.sqrt(k / 2.0) * N * V * abs(dphi)
    # d/dx [sin x / sqrt(d)] = (cos x * d - V sin^2 x / 2) / d^1.5
    g = N * (c * d - 0.5 * V * s * s) / d**1.5
    return float(pre * np.sign(s) * g)


def snr_max(model: InterferenceModel, budget: PhotonBudget, dphi: float) -> float:
    """SNR at the optimal bias: (1 - xi) sqrt(k) N sqrt(1 - sqrt(1 - V^2)) dphi."""
    N, V, xi, k = model.n_photons, model.visibility, model.overlap, budget.k
    return float((1.0 - xi) * np.sqrt(k) * N * np.sqrt(1.0 - np.sqrt(1.0 - V * V)) * abs(dphi))


def optimal_bias(n_photons: int, visibility: float) -> float:
    """Bias phase in (0, pi/(2N)] maximizing the SNR.

    cos(N bias) = (1 - sqrt(1 - V^2)) / V. For V = 1 the optimum collapses onto
    the dark fringe (bias 0) and a DegenerateBiasWarning is issued.
    """
    V = float(visibility)
    if not 0.0 < V <= 1.0:
        raise ValueError(f"visibility must lie in (0, 1], got {V}: no fringe to bias on")
    if V == 1.0:
        warnings.warn("V = 1: optimal bias is the degenerate dark-fringe limit",
                      DegenerateBiasWarning, stacklevel=2)
        return 0.0
    return float(np.arccos((1.0 - np.sqrt(1.0 - V * V)) / V) / n_photons)


def quantum_advantage(v_quantum: float, v_classical: float, n_photons: int) -> float:
    """Ratio of optimal SNRs, N-photon probe vs classical probe, at equal photon number."""
    for v in (v_quantum, v_classical):
        if not 0.0 < v <= 1.0:
            raise ValueError(f"visibilities must lie in (0, 1], got {v}")
    q = np.sqrt(1.0 - np.sqrt(1.0 - v_quantum**2))
    c = np.sqrt(1.0 - np.sqrt(1.0 - v_classical**2))
    return float(np.sqrt(n_photons) * q / c)


def expected_step_signal(model: InterferenceModel, budget: PhotonBudget,
                         geometry: BeamGeometry, dphi: float) -> float:
    """Exact peak-minus-background expectation for a step of phase ``dphi``."""
    N, V = model.n_photons, model.visibility
    x = N * model.bias_phase
    return float(0.5 * budget.k * V * (np.cos(x) - np.cos(x + N * dphi))
                 * (1.0 - overlap_xi(geometry)))


def back_derive_phase(snr: float, model: InterferenceModel, budget: PhotonBudget) -> float:
    """Differential phase that the small-signal SNR formula maps to ``snr``."""
    return snr / snr_analytic(model, budget, 1.0)


# ---------------------------------------------------------------- step fit


@dataclass(frozen=True)
class SnrReport:
    signal: float
    noise: float
    snr: float
    background: float
    amplitude: float  # signed step-response amplitude A in B + A w(s - s0)
    step_position: float
    step_phase: float
    step_height: float
    signal_err: float
    snr_err: float
    background_err: float
    step_position_err: float
    step_phase_err: float
    step_height_err: float
    n_positions: int
    n_background: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _linear_fit(y, W):
    """Least squares for (B, A) in y = B + A W, vectorized over rows of W."""
    n = y.shape[-1]
    sw, sww = W.sum(-1), (W * W).sum(-1)
    sy, swy = y.sum(), W @ y
    det = n * sww - sw * sw
    with np.errstate(divide="ignore", invalid="ignore"):
        A = (n * swy - sw * sy) / det
        B = (sy - A * sw) / n
    return B, A


def invert_step_phase(amplitude: float, model: InterferenceModel, budget: PhotonBudget):
    """Step phase from the fitted amplitude, and d(phase)/d(amplitude)."""
    N, V, k = model.n_photons, model.visibility, budget.k
    if k <= 0 or V <= 0:
        raise FitError("cannot invert step phase without counts or fringe contrast")
    x0 = np.mod(N * model.bias_phase, 2 * np.pi)
    arg = np.cos(x0) - 2.0 * amplitude / (k * V)
    arg_c = float(np.clip(arg, -1.0, 1.0))
    theta = np.arccos(arg_c)
    if x0 > np.pi:
        theta = 2 * np.pi - theta
    sin_t = np.sin(theta)
    dtheta_dA = np.inf if sin_t == 0 else (2.0 / (k * V)) / sin_t
    if x0 > np.pi:
        dtheta_dA = -dtheta_dA
    return float((theta - x0) / N), float(abs(dtheta_dA) / N)


def fit_step(record: ScanRecord, geometry: BeamGeometry | None = None,
             background_threshold: float = BACKGROUND_THRESHOLD,
             material: MaterialModel | None = None, max_nfev: int = 200) -> SnrReport:
    """Fit C(s) = B + A w(s - s0) to a line scan and extract signal, noise and SNR.

    The fitter seeds s0 from a grid search (B and A are linear for fixed s0),
    then refines all three parameters with bounded damped least squares.
    """
    if record.is_2d:
        raise ValueError("fit_step needs a 1D record")
    geometry = geometry or record.config.geometry
    s = np.asarray(record.positions, dtype=float)
    y = np.asarray(record.sampled_counts, dtype=float)
    if len(s) < 10:
        raise FitError("need at least 10 scan positions", {"n_positions": len(s)})
    if np.ptp(y) == 0.0:
        raise FitError("counts are constant; no step to fit", {"level": float(y[0])})

    lo, hi = float(s.min()), float(s.max())
    step = min(float(np.min(np.diff(s))), geometry.sigma / 4.0)
    grid = np.arange(lo, hi + 0.5 * step, step)
    W = window_weight(geometry, s[None, :] - grid[:, None])
    B, A = _linear_fit(y, W)
    ss = ((y[None, :] - B[:, None] - A[:, None] * W) ** 2).sum(-1)
    ss = np.where(np.isfinite(ss), ss, np.inf)
    i = int(np.argmin(ss))

    def resid(p):
        return p[0] + p[1] * window_weight(geometry, s - p[2]) - y

    scale = max(float(np.std(y)), 1.0)
    sol = optimize.least_squares(
        resid, [B[i], A[i], grid[i]], method="trf",
        bounds=([-np.inf, -np.inf, lo], [np.inf, np.inf, hi]),
        x_scale=[scale, scale, geometry.sigma], max_nfev=max_nfev,
        xtol=1e-12, ftol=1e-12, gtol=1e-12,
    )
    if sol.status <= 0:
        raise FitError("step fit did not converge",
                       {"message": sol.message, "nfev": sol.nfev, "x": sol.x.tolist()})
    Bf, Af, s0 = (float(v) for v in sol.x)
    rss = float(np.sum(sol.fun ** 2))
    dof = max(len(s) - 3, 1)
    try:
        cov = np.linalg.inv(sol.jac.T @ sol.jac) * (rss / dof)
        errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        errs = np.full(3, np.nan)

    bg = window_weight(geometry, s - s0) < background_threshold
    n_bg = int(bg.sum())
    if n_bg < 3:
        raise FitError("too few background positions for a noise estimate",
                       {"n_background": n_bg, "threshold": background_threshold})
    noise = float(np.sqrt(np.sum((y[bg] - Bf) ** 2) / (n_bg - 1)))
    if noise <= 0:
        raise FitError("zero background scatter", {"n_background": n_bg})

    w0 = window_weight(geometry, 0.0)
    signal = abs(Af) * w0
    signal_err = float(errs[1] * w0)
    snr = signal / noise

    cfg = record.config
    model = replace(cfg.model, overlap=overlap_xi(geometry))
    phase, dphase_dA = invert_step_phase(Af, model, cfg.budget)
    phase_err = dphase_dA * errs[1]
    material = material or MaterialModel()
    return SnrReport(
        signal=float(signal), noise=noise, snr=float(snr), background=Bf, amplitude=Af,
        step_position=s0, step_phase=phase, step_height=float(phase_to_height(phase, material)),
        signal_err=signal_err, snr_err=float(snr * signal_err / signal) if signal > 0 else np.inf,
        background_err=float(errs[0]), step_position_err=float(errs[2]),
        step_phase_err=float(phase_err),
        step_height_err=float(phase_to_height(phase_err, material)),
        n_positions=len(s), n_background=n_bg,
    )


# ---------------------------------------------------------------- ensembles


def _fit_seed(profile, config, seed, threshold):
    rec = scan_1d(profile, config.with_seed(seed))
    try:
        return fit_step(rec, config.geometry, threshold, profile.material)
    except FitError:
        return None


def _fit_seed_batch(profile, config, seeds, threshold):
    return [_fit_seed(profile, config, s, threshold) for s in seeds]


def ensemble_fit(profile: StepProfile, config: ScanConfig, seeds,
                 background_threshold: float = BACKGROUND_THRESHOLD,
                 workers: int = 1) -> list:
    """Fit one scan per seed; failed fits come back as None, in seed order."""
    seeds = [int(s) for s in seeds]
    if workers <= 1 or len(seeds) < 8:
        return _fit_seed_batch(profile, config, seeds, background_threshold)
    n = -(-len(seeds) // (4 * workers))
    batches = [seeds[i:i + n] for i in range(0, len(seeds), n)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_fit_seed_batch, [profile] * len(batches), [config] * len(batches),
                         batches, [background_threshold] * len(batches))
        return [r for part in parts for r in part]


@dataclass(frozen=True)
class BiasSweepPoint:
    bias_phase: float
    snr_empirical: float  # mean over successful seeds
    snr_std: float  # single-scan scatter
    snr_analytic: float
    k: float
    total_photons: float
    n_ok: int
    n_failed: int

    @property
    def snr_sem(self) -> float:
        return self.snr_std / np.sqrt(self.n_ok) if self.n_ok else np.nan

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["snr_sem"] = self.snr_sem
        return d


def default_bias_grid(n_photons: int, points: int = 12) -> np.ndarray:
    """``points`` evenly spaced interior points of (0, pi/N)."""
    return np.arange(1, points + 1) * np.pi / (n_photons * (points + 1))


def _mean_std(values):
    v = np.sort(np.asarray(values, dtype=float))  # order-independent aggregation
    if v.size == 0:
        return np.nan, np.nan
    m = float(np.sum(v) / v.size)
    sd = float(np.sqrt(np.sum((v - m) ** 2) / (v.size - 1))) if v.size > 1 else 0.0
    return m, sd


def bias_sweep(profile: StepProfile, base_config: ScanConfig, bias_grid, seeds_per_point: int,
               background_threshold: float = BACKGROUND_THRESHOLD,
               workers: int = 1) -> list[BiasSweepPoint]:
    """Empirical SNR versus bias phase next to the small-signal prediction.

    Seeds for grid point i are base_seed + i * seeds_per_point + j.
    """
    grid = np.asarray(bias_grid, dtype=float)
    N = base_config.model.n_photons
    if np.any(grid <= 0) or np.any(grid >= np.pi / N):
        raise ValueError(f"bias grid must lie inside (0, pi/{N})")
    xi = overlap_xi(base_config.geometry)
    base = int(base_config.rng_seed)
    configs = [replace(base_config, model=replace(base_config.model, bias_phase=float(b)))
               for b in grid]
    jobs = [(cfg, [(base + i * seeds_per_point + j) % 2**64 for j in range(seeds_per_point)])
            for i, cfg in enumerate(configs)]

    if workers <= 1:
        results = [_fit_seed_batch(profile, cfg, seeds, background_threshold) for cfg, seeds in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_fit_seed_batch, [profile] * len(jobs), [c for c, _ in jobs],
                                    [s for _, s in jobs], [background_threshold] * len(jobs)))

    out = []
    for b, cfg, reports in zip(grid, configs, results):
        snrs = [r.snr for r in reports if r is not None]
        mean, sd = _mean_std(snrs)
        analytic = snr_analytic(replace(cfg.model, overlap=xi), cfg.budget, profile.phase)
        out.append(BiasSweepPoint(float(b), mean, sd, analytic, cfg.budget.k,
                                  cfg.budget.total_photons, len(snrs), len(reports) - len(snrs)))
    return out
