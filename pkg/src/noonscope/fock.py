"""
Exact two-mode photon-number algebra.

The states handled here live in the fixed-N sector of two bosonic modes, so a
state is a dense vector over |n; N-n> with n = 0..N photons in mode 1. This is
enough to push a NOON state through a phase shift, rotate it to the diagonal
(plus/minus) polarization basis and read off parity probabilities by brute
force, which is how the closed-form fringe in ``interference`` is checked.

The spatial profile of the beams is deliberately absent: it only enters the
detection probability through scalar weights (see ``optics``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import UnsupportedSizeError

MAX_ORACLE_PHOTONS = 10
_NORM_TOL = 1e-10


class PolarizationBasis(enum.Enum):
    HV = "HV"  # horizontal / vertical
    PM = "PM"  # plus / minus diagonal


@dataclass(frozen=True)
class TwoModeFockState:
    """Pure state of N photons shared between two modes.

    ``amplitudes[n]`` is the amplitude of |n; N-n>, i.e. n photons in mode 1
    (H or P) and N-n photons in mode 2 (V or M).
    """

    total_photons: int
    amplitudes: np.ndarray
    basis: PolarizationBasis = PolarizationBasis.HV

    def __post_init__(self):
        if self.total_photons < 1:
            raise ValueError(f"total_photons must be >= 1, got {self.total_photons}")
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.total_photons + 1,):
            raise ValueError(
                f"expected {self.total_photons + 1} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalized (|psi|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def photons_in(self, mode: int) -> np.ndarray:
        """Photon count in ``mode`` (1 or 2) for every basis index."""
        n = np.arange(self.total_photons + 1)
        if mode == 1:
            return n
        if mode == 2:
            return self.total_photons - n
        raise ValueError(f"mode must be 1 or 2, got {mode}")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def equals_up_to_phase(self, other: "TwoModeFockState", tol: float = 1e-12) -> bool:
        """Ray equality; the gauge is fixed on the largest-magnitude amplitude."""
        if self.total_photons != other.total_photons or self.basis != other.basis:
            return False
        i = int(np.argmax(np.abs(self.amplitudes)))
        if abs(other.amplitudes[i]) < tol:
            return False
        gauge = self.amplitudes[i] / other.amplitudes[i]
        gauge /= abs(gauge)
        return bool(np.max(np.abs(self.amplitudes - gauge * other.amplitudes)) <= tol)


def basis_state(n1: int, n2: int, basis: PolarizationBasis = PolarizationBasis.HV) -> TwoModeFockState:
    """The number state |n1; n2> in the given basis."""
    total = n1 + n2
    amps = np.zeros(total + 1, dtype=complex)
    amps[n1] = 1.0
    return TwoModeFockState(total, amps, basis)


def make_noon(n_photons: int, relative_phase: float = 0.0) -> TwoModeFockState:
    """(|N;0> + exp(i N phase) |0;N>) / sqrt(2) in the HV basis."""
    if n_photons < 1:
        raise ValueError(f"NOON state needs N >= 1, got {n_photons}")
    amps = np.zeros(n_photons + 1, dtype=complex)
    amps[n_photons] = 1.0 / math.sqrt(2.0)
    amps[0] = np.exp(1j * n_photons * relative_phase) / math.sqrt(2.0)
    return TwoModeFockState(n_photons, amps, PolarizationBasis.HV)


def apply_mode_phase(state: TwoModeFockState, phi: float, mode: int = 2) -> TwoModeFockState:
    """Imprint phase ``phi`` per photon on one mode."""
    counts = state.photons_in(mode)
    amps = state.amplitudes * np.exp(1j * phi * counts)
    return TwoModeFockState(state.total_photons, amps, state.basis)


@lru_cache(maxsize=None)
def _rotation_matrix(n_photons: int) -> np.ndarray:
    """Matrix of the balanced rotation a1+ -> (b1+ + b2+)/sqrt2, a2+ -> (b1+ - b2+)/sqrt2.

    Column n holds the image of |n; N-n>. The expansion of
    (b1 + b2)^n (b1 - b2)^(N-n) is done with integer binomials; only the final
    factorial ratio goes through a square root.
    """
    N = n_photons
    out = np.zeros((N + 1, N + 1), dtype=float)
    for n in range(N + 1):
        m = N - n
        coeff = [0] * (N + 1)  # integer coefficient of b1^a b2^(N-a)
        for j in range(n + 1):
            cj = math.comb(n, j)
            for l in range(m + 1):
                # b1 power: j from the first factor, (m - l) from the second
                a = j + (m - l)
                sign = -1 if l % 2 else 1
                coeff[a] += sign * cj * math.comb(m, l)
        for a, c in enumerate(coeff):
            if c == 0:
                continue
            ratio = Fraction(math.factorial(a) * math.factorial(N - a),
                             math.factorial(n) * math.factorial(m))
            out[a, n] = c * math.sqrt(ratio) / 2.0 ** (N / 2.0)
    return out


def rotate_to_diagonal(state: TwoModeFockState) -> TwoModeFockState:
    """Change basis HV -> PM.

    The rotation is an involution, so applying it to a PM state returns the
    HV representation.
    """
    if state.total_photons > 60:
        raise UnsupportedSizeError(f"N={state.total_photons} too large for exact rotation")
    amps = _rotation_matrix(state.total_photons) @ state.amplitudes
    other = PolarizationBasis.PM if state.basis is PolarizationBasis.HV else PolarizationBasis.HV
    return TwoModeFockState(state.total_photons, amps, other)


def odd_count_probability(state: TwoModeFockState, mode: int = 2) -> float:
    """Probability of an odd photon number in ``mode``.

    For the parity readout the state should already be in the PM basis, with
    mode 2 the minus-diagonal output.
    """
    odd = (state.photons_in(mode) % 2) == 1
    return float(np.sum(state.probabilities()[odd]))


def oracle_fringe(n_photons: int, bias_phase: float, phi_grid) -> np.ndarray:
    """Brute-force odd-count probability in the M output versus sample phase.

    NOON state with bias phase, sample phase on mode 2, diagonal rotation,
    parity readout. Ideal visibility and no beam overlap.
    """
    if not 1 <= n_photons <= MAX_ORACLE_PHOTONS:
        raise UnsupportedSizeError(
            f"oracle supports 1 <= N <= {MAX_ORACLE_PHOTONS}, got {n_photons}"
        )
    noon = make_noon(n_photons, bias_phase)
    phis = np.atleast_1d(np.asarray(phi_grid, dtype=float))
    out = np.empty(phis.shape)
    for i, phi in enumerate(phis.flat):
        out.flat[i] = odd_count_probability(rotate_to_diagonal(apply_mode_phase(noon, phi, 2)), 2)
    return out
