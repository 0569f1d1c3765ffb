"""
Closed-form detection probability of the parity (odd-count) readout and the
expected count rates built on it, plus a sinusoid fit for measured fringes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import FitError


@dataclass(frozen=True)
class InterferenceModel:
    """Operating point of an N-photon interferometer.

    Attributes:
        n_photons: photons per probe state (1 for a classical probe).
        visibility: fringe visibility V_N in [0, 1].
        bias_phase: static bias phase in radians.
        overlap: fraction of the beam profile shared by both probe beams.
    """

    n_photons: int
    visibility: float = 1.0
    bias_phase: float = 0.0
    overlap: float = 0.0

    def __post_init__(self):
        if int(self.n_photons) != self.n_photons or self.n_photons < 1:
            raise ValueError(f"n_photons must be a positive integer, got {self.n_photons}")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.visibility}")
        if not 0.0 <= self.overlap < 1.0:
            raise ValueError(f"overlap must lie in [0, 1), got {self.overlap}")

    @property
    def background_probability(self) -> float:
        """Probability with no sample phase: 1/2 (1 - V cos(N bias))."""
        return 0.5 * (1.0 - self.visibility * np.cos(self.n_photons * self.bias_phase))


@dataclass(frozen=True)
class PhotonBudget:
    """Mean number ``k`` of N-photon states delivered per scan position."""

    k: float
    n_photons: int = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")

    @property
    def total_photons(self) -> float:
        return self.n_photons * self.k

    @classmethod
    def from_total(cls, total_photons: float, n_photons: int) -> "PhotonBudget":
        return cls(total_photons / n_photons, n_photons)


def detection_probability(model: InterferenceModel, phi):
    """Odd-count probability for sample phase ``phi`` (scalar or array).

    The visibility damps both cosines; the overlap fraction sees only the bias.
    """
    N, V, xi = model.n_photons, model.visibility, model.overlap
    phi = np.asarray(phi, dtype=float)
    varying = 0.5 * (1.0 - V * np.cos(N * phi + N * model.bias_phase))
    p = (1.0 - xi) * varying + xi * model.background_probability
    return p if p.ndim else float(p)


def expected_counts(model: InterferenceModel, budget: PhotonBudget, phi):
    """Mean detection events per position, k P(phi)."""
    p = np.asarray(detection_probability(model, phi))
    c = budget.k * p
    return c if c.ndim else float(c)


def fringe_scan(model: InterferenceModel, budget: PhotonBudget, phi_grid) -> np.ndarray:
    """(phi, expected counts) pairs as an (M, 2) array."""
    phis = np.asarray(phi_grid, dtype=float).ravel()
    if phis.size == 0:
        raise ValueError("phase grid is empty")
    return np.column_stack([phis, expected_counts(model, budget, phis)])


def sample_fringe(model: InterferenceModel, budget: PhotonBudget, phi_grid, rng) -> np.ndarray:
    """Poisson-sampled fringe; ``rng`` is a numpy Generator."""
    data = fringe_scan(model, budget, phi_grid)
    data[:, 1] = rng.poisson(data[:, 1])
    return data


@dataclass(frozen=True)
class FringeFit:
    visibility: float
    bias_phase: float
    amplitude: float  # mean level a of a + b cos(w phi + c)
    frequency: float  # w; the fringe period is 2 pi / w
    visibility_err: float
    frequency_err: float
    residual_ss: float
    n_points: int

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.frequency


def _sinusoid_design(phi, w):
    return np.column_stack([np.ones_like(phi), np.cos(w * phi), np.sin(w * phi)])


def fit_visibility(fringe_data, n_photons: int | None = None,
                   min_significance: float | None = None) -> FringeFit:
    """Least-squares fit of counts = a + b cos(w phi + c).

    With ``n_photons`` given the frequency is held at N; otherwise it is found
    by a linear scan over w followed by a nonlinear refinement. The visibility
    is |b| / a and the bias phase is c / w after moving the sign of b into c so
    that the fringe reads a (1 - V cos(w phi + c)).

    A fit whose amplitude is below ``min_significance`` standard errors raises
    FitError. The default is 3 with a fixed frequency and 6 with a free one,
    since the frequency search alone turns pure noise into ~3.5 sigma peaks.
    """
    if min_significance is None:
        min_significance = 3.0 if n_photons is not None else 6.0
    data = np.asarray(fringe_data, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError("fringe data must be (phi, counts) pairs")
    phi, y = data[:, 0], data[:, 1]
    if len(phi) < 5:
        raise FitError("need at least 5 fringe points", {"n_points": len(phi)})
    if np.ptp(y) == 0.0:
        raise FitError("all counts are equal; no fringe to fit", {"level": float(y[0])})

    # each sample covers one grid spacing, so an endpoint-free grid over
    # [0, 2 pi) counts as a full turn
    sorted_phi = np.sort(phi)
    span = np.ptp(phi) + float(np.median(np.diff(sorted_phi)))
    if n_photons is None:
        # linear least squares is exact in (a, b cos c, b sin c) for fixed w
        dphi = np.min(np.diff(sorted_phi))
        w_max = min(np.pi / max(dphi, 1e-12), 40.0)
        w_grid = np.arange(0.25, w_max, 0.005)
        best_w, best_ss = None, np.inf
        for w in w_grid:
            X = _sinusoid_design(phi, w)
            coef, *_ = np.linalg.lstsq(X, y, rcond=None)
            ss = float(np.sum((y - X @ coef) ** 2))
            if ss < best_ss:
                best_w, best_ss = w, ss
        w0 = best_w
    else:
        w0 = float(n_photons)
    if span * w0 < 2.0 * np.pi * 0.99:
        raise FitError("data do not span one fringe period", {"span": span, "frequency": w0})

    X = _sinusoid_design(phi, w0)
    (a, bc, bs), *_ = np.linalg.lstsq(X, y, rcond=None)
    p0 = [a, bc, bs] + ([w0] if n_photons is None else [])

    def resid(p):
        w = p[3] if n_photons is None else w0
        return p[0] + p[1] * np.cos(w * phi) + p[2] * np.sin(w * phi) - y

    sol = optimize.least_squares(resid, p0, method="lm", xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if not sol.success:
        raise FitError("fringe fit did not converge", {"message": sol.message})
    a, bc, bs = sol.x[:3]
    w = sol.x[3] if n_photons is None else w0
    if a <= 0:
        raise FitError("fitted mean level is not positive", {"a": a})

    ss = float(np.sum(sol.fun ** 2))
    dof = max(len(phi) - len(sol.x), 1)
    J = sol.jac
    try:
        cov = np.linalg.inv(J.T @ J) * (ss / dof)
    except np.linalg.LinAlgError:
        cov = np.full((len(sol.x), len(sol.x)), np.nan)

    b = float(np.hypot(bc, bs))
    # a + bc cos + bs sin = a - b cos(w phi + c)  with  c = atan2(bs, -bc)
    c = float(np.arctan2(bs, -bc))
    if b > 0 and ss > 0:
        db = np.sqrt(max((bc * bc * cov[1, 1] + bs * bs * cov[2, 2] + 2 * bc * bs * cov[1, 2]) / (b * b), 0.0))
        if b < min_significance * db:
            raise FitError("fringe amplitude is not significant", {"amplitude": b, "stderr": db})
    else:
        db = 0.0
    vis = b / a
    vis_err = vis * np.sqrt((db / b) ** 2 + cov[0, 0] / a**2) if b > 0 else 0.0
    w_err = float(np.sqrt(cov[3, 3])) if n_photons is None else 0.0
    bias = float(np.mod(c, 2 * np.pi) / w)
    return FringeFit(float(vis), bias, float(a), float(w), float(vis_err), w_err, ss, len(phi))
