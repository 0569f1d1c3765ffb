"""
Monte Carlo scanning simulator.

At every scan position the probe is centred between the two displaced beams.
Each point u of the recombined footprint interferes the sample phase at
u + separation/2 with the phase at u - separation/2, so

    P(pos) = 1/2 (1 - V * sum_u f(u - pos) cos(N D(u) + N bias))

with D(u) the local phase difference. For a straight step D is either the
step phase (inside a window of width ``separation``) or zero, which gives the
two-term form used by ``differential_probability`` for ``StepProfile``.
Counts are Poisson with mean k P.

Random numbers come from one Philox stream per scan position, keyed by
(seed, position index), so sampling can be split across workers in any way
without changing the result.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np
from scipy import ndimage

from .errors import OutOfDomainError
from .interference import InterferenceModel, PhotonBudget
from .optics import BeamGeometry, MaterialModel, height_to_phase, phase_to_height, window_weight


@dataclass(frozen=True)
class StepProfile:
    """Straight step along y: heights jump by ``step_height`` (nm) for x > ``step_position`` (um)."""

    step_height: float
    step_position: float = 0.0
    material: MaterialModel = MaterialModel()

    @property
    def phase(self) -> float:
        return height_to_phase(self.step_height, self.material)

    @classmethod
    def from_phase(cls, phase: float, step_position: float = 0.0,
                   material: MaterialModel = MaterialModel()) -> "StepProfile":
        return cls(phase_to_height(phase, material), step_position, material)


@dataclass(frozen=True, eq=False)
class HeightMap:
    """Height map in nm on a square pixel grid; ``origin`` is the centre of pixel [0, 0] in um."""

    heights: np.ndarray
    pitch: float
    material: MaterialModel = MaterialModel()
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        h = np.array(self.heights, dtype=float)
        if h.ndim != 2 or h.size == 0:
            raise ValueError(f"height map must be a nonempty 2D array, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("height map contains non-finite values")
        if not self.pitch > 0:
            raise ValueError(f"pitch must be > 0, got {self.pitch}")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @property
    def shape(self):
        return self.heights.shape

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + self.pitch * np.arange(self.shape[1])

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + self.pitch * np.arange(self.shape[0])

    @property
    def phase(self) -> np.ndarray:
        return height_to_phase(self.heights, self.material)

    def pixel_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the pixel containing (x, y)."""
        col = (x - self.origin[0]) / self.pitch
        row = (y - self.origin[1]) / self.pitch
        ny, nx = self.shape
        if not (-0.5 <= col < nx - 0.5 and -0.5 <= row < ny - 0.5):
            raise OutOfDomainError(f"position ({x}, {y}) um lies outside the height map")
        return int(np.floor(row + 0.5)), int(np.floor(col + 0.5))

    @classmethod
    def from_file(cls, path, pitch: float, material: MaterialModel = MaterialModel()) -> "HeightMap":
        """Whitespace-separated text grid of heights in nm (``#`` comments allowed)."""
        return cls(np.loadtxt(Path(path), ndmin=2), pitch, material)


SampleProfile = Union[StepProfile, HeightMap]


@dataclass(frozen=True, eq=False)
class ScanConfig:
    """Everything needed to reproduce one simulated scan.

    ``model.overlap`` is ignored here: the beam geometry fixes the overlap.
    For a height map ``positions`` may be None, meaning every ``stride``-th
    pixel centre; ``axis`` is the direction of the beam separation.
    """

    model: InterferenceModel
    geometry: BeamGeometry
    budget: PhotonBudget
    positions: np.ndarray | None = None
    rng_seed: int = 0
    axis: str = "x"
    stride: int = 1

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError(f"axis must be 'x' or 'y', got {self.axis!r}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")
        if self.positions is not None:
            pos = np.array(self.positions, dtype=float).ravel()
            if pos.size and np.any(np.diff(pos) <= 0):
                raise ValueError("scan positions must be strictly increasing")
            pos.setflags(write=False)
            object.__setattr__(self, "positions", pos)

    def with_seed(self, seed: int) -> "ScanConfig":
        return replace(self, rng_seed=int(seed))


@dataclass(frozen=True, eq=False)
class ScanRecord:
    positions: np.ndarray  # (M,) for 1D, (M, 2) as (x, y) for 2D
    expected_probability: np.ndarray
    expected_counts: np.ndarray
    sampled_counts: np.ndarray
    config: ScanConfig
    shape: tuple | None = None  # (rows, cols) of a 2D scan
    metadata: dict = field(default_factory=dict)

    @property
    def is_2d(self) -> bool:
        return self.shape is not None

    def image(self, column: str = "sampled_counts") -> np.ndarray:
        if not self.is_2d:
            raise ValueError("1D record has no image")
        return np.asarray(getattr(self, column)).reshape(self.shape)

    def identical_to(self, other: "ScanRecord") -> bool:
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("positions", "expected_probability", "expected_counts", "sampled_counts")
        ) and self.shape == other.shape


# ---------------------------------------------------------------- probability


def step_probability(model: InterferenceModel, geometry: BeamGeometry, step_phase: float,
                     offset):
    """Two-term detection probability with the step at ``offset`` from the beam midpoint."""
    w = np.asarray(window_weight(geometry, offset))
    N, V = model.n_photons, model.visibility
    cos_step = np.cos(N * (step_phase + model.bias_phase))
    cos_bias = np.cos(N * model.bias_phase)
    p = 0.5 * (1.0 - V * (w * cos_step + (1.0 - w) * cos_bias))
    return p if p.ndim else float(p)


def footprint_weights(sigma_px: float, truncate: float = 4.0) -> np.ndarray:
    """Normalized 1D Gaussian weights sampled at pixel centres."""
    r = max(int(np.ceil(truncate * sigma_px)), 1)
    x = np.arange(-r, r + 1, dtype=float)
    g = np.exp(-0.5 * (x / sigma_px) ** 2)
    return g / g.sum()


def _shift_split(separation: float, pitch: float) -> tuple[int, int]:
    """Pixel offsets (ahead, behind) whose sum is the separation in pixels."""
    total = int(round(separation / pitch))
    return (total + 1) // 2, total // 2


def differential_phase_map(hmap: HeightMap, geometry: BeamGeometry, axis: str = "x") -> np.ndarray:
    """phase(u + separation/2) - phase(u - separation/2), edges extended."""
    ahead, behind = _shift_split(geometry.separation, hmap.pitch)
    phase = hmap.phase
    ax = 1 if axis == "x" else 0
    n = phase.shape[ax]
    idx = np.arange(n)
    fwd = np.take(phase, np.clip(idx + ahead, 0, n - 1), axis=ax)
    bwd = np.take(phase, np.clip(idx - behind, 0, n - 1), axis=ax)
    return fwd - bwd


def _coherence_map(hmap, geometry, model, axis):
    N = model.n_photons
    return np.cos(N * differential_phase_map(hmap, geometry, axis) + N * model.bias_phase)


def probability_map(hmap: HeightMap, geometry: BeamGeometry, model: InterferenceModel,
                    axis: str = "x") -> np.ndarray:
    """Detection probability with the probe centred on every pixel."""
    g = footprint_weights(geometry.sigma / hmap.pitch)
    c = _coherence_map(hmap, geometry, model, axis)
    c = ndimage.correlate1d(c, g, axis=0, mode="nearest")
    c = ndimage.correlate1d(c, g, axis=1, mode="nearest")
    return 0.5 * (1.0 - model.visibility * c)


def _map_probability_at(hmap, geometry, model, axis, x, y):
    row, col = hmap.pixel_of(x, y)
    g = footprint_weights(geometry.sigma / hmap.pitch)
    r = len(g) // 2
    ny, nx = hmap.shape
    rows = np.clip(np.arange(row - r, row + r + 1), 0, ny - 1)
    cols = np.clip(np.arange(col - r, col + r + 1), 0, nx - 1)
    c = _coherence_map(hmap, geometry, model, axis)[np.ix_(rows, cols)]
    return float(0.5 * (1.0 - model.visibility * (g @ c @ g)))


def differential_probability(profile: SampleProfile, geometry: BeamGeometry,
                             model: InterferenceModel, position, axis: str = "x") -> float:
    """Detection probability with the probe midpoint at ``position``.

    ``position`` is a scalar x (um) for a step and an (x, y) pair for a map.
    """
    if isinstance(profile, StepProfile):
        return step_probability(model, geometry, profile.phase,
                                profile.step_position - float(position))
    x, y = position
    return _map_probability_at(profile, geometry, model, axis, float(x), float(y))


# ---------------------------------------------------------------- sampling


def position_generator(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one scan position: Philox keyed by (seed, index)."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


def derive_seed(seed: int, *tags: int) -> int:
    """Independent 64-bit seed for a named sub-experiment."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(t) for t in tags))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_counts(expected: float, rng: np.random.Generator) -> int:
    """One Poisson draw with mean ``expected``."""
    if expected < 0:
        raise ValueError(f"expected counts must be >= 0, got {expected}")
    return int(rng.poisson(expected))


def _sample_range(seed, start, means):
    out = np.empty(len(means), dtype=np.int64)
    for i, mu in enumerate(means):
        out[i] = sample_counts(mu, position_generator(seed, start + i))
    return out


def default_workers() -> int:
    return os.cpu_count() or 1


def sample_all(seed: int, means: np.ndarray, workers: int = 1, chunk: int = 4096) -> np.ndarray:
    """Poisson counts for every position; independent of ``workers``."""
    means = np.asarray(means, dtype=float).ravel()
    if workers <= 1 or len(means) <= chunk:
        return _sample_range(seed, 0, means)
    starts = range(0, len(means), chunk)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_sample_range, [seed] * len(starts), starts,
                         [means[s:s + chunk] for s in starts])
        return np.concatenate(list(parts))


# ---------------------------------------------------------------- scans


def default_positions(start: float = -150.0, stop: float = 150.0, step: float = 1.0) -> np.ndarray:
    n = int(round((stop - start) / step)) + 1
    return start + step * np.arange(n)


def scan_1d(profile: StepProfile, config: ScanConfig, workers: int = 1) -> ScanRecord:
    """Line scan across a straight step."""
    if not isinstance(profile, StepProfile):
        raise TypeError("scan_1d needs a StepProfile")
    pos = config.positions if config.positions is not None else default_positions()
    p = step_probability(config.model, config.geometry, profile.phase, profile.step_position - pos)
    p = np.asarray(p, dtype=float)
    mu = config.budget.k * p
    counts = sample_all(config.rng_seed, mu, workers)
    return ScanRecord(pos.copy(), p, mu, counts, config)


def scan_2d(profile: HeightMap, config: ScanConfig, workers: int = 1) -> ScanRecord:
    """Raster scan over a height map, one position per ``stride``-th pixel."""
    if not isinstance(profile, HeightMap):
        raise TypeError("scan_2d needs a HeightMap")
    pmap = probability_map(profile, config.geometry, config.model, config.axis)
    sl = slice(None, None, config.stride)
    pmap = pmap[sl, sl]
    ys, xs = profile.ys[sl], profile.xs[sl]
    X, Y = np.meshgrid(xs, ys)
    p = pmap.ravel()
    mu = config.budget.k * p
    counts = sample_all(config.rng_seed, mu, workers)
    pos = np.column_stack([X.ravel(), Y.ravel()])
    return ScanRecord(pos, p, mu, counts, config, shape=pmap.shape)


def make_q_relief(size: int = 64, pitch: float = 5.0, height_nm: float = 17.3) -> np.ndarray:
    """Synthetic raised 'Q': a ring with a diagonal tail, ``height_nm`` above a flat floor."""
    c = (size - 1) / 2.0
    y, x = np.mgrid[0:size, 0:size].astype(float)
    x, y = (x - c) * pitch, (y - c) * pitch  # um, y grows downward in the image
    r = np.hypot(x, y)
    extent = size * pitch
    r_out, r_in = 0.34 * extent, 0.20 * extent
    ring = (r <= r_out) & (r >= r_in)
    # tail from inside the ring towards the lower right corner
    t = (x + y) / np.sqrt(2.0)
    d = np.abs(x - y) / np.sqrt(2.0)
    tail = (d <= 0.06 * extent) & (t >= 0.12 * extent) & (t <= 0.47 * extent)
    return np.where(ring | tail, height_nm, 0.0)
