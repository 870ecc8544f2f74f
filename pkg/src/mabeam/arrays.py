"""Physical model of a movable-antenna linear array.

Everything here is a pure function of immutable value types: steering
vectors, beam gain, angular coverage regions and their sample grids, and
the geometric feasibility checks for antenna positions.  Angles are radians
internally (the CLI converts from degrees), lengths are meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s

__all__ = [
    "SPEED_OF_LIGHT",
    "ArrayConfig",
    "PositionVector",
    "WeightVector",
    "CoverageSpec",
    "SampleGrid",
    "steering_vector",
    "beam_gain",
    "min_gain",
    "discretize",
    "is_feasible",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry of the linear array.

    Parameters
    ----------
    n_antennas : int
        Number of elements N.
    aperture : float
        Length D of the movement region in meters; elements live in [0, D].
    wavelength : float
        Carrier wavelength in meters.  If omitted, derived from
        ``carrier_freq``.
    min_spacing : float
        Minimum distance between adjacent elements in meters.  Defaults to
        half a wavelength.
    carrier_freq : float
        Carrier frequency in Hz.  Redundant with ``wavelength``; when both
        are given they must agree with the speed of light to 1e-6 relative.
    """

    n_antennas: int
    aperture: float
    wavelength: float = None  # type: ignore[assignment]
    min_spacing: float = None  # type: ignore[assignment]
    carrier_freq: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.wavelength is None and self.carrier_freq is None:
            raise ValueError("one of wavelength or carrier_freq is required")
        if self.wavelength is None:
            object.__setattr__(self, "wavelength", SPEED_OF_LIGHT / self.carrier_freq)
        elif self.carrier_freq is None:
            object.__setattr__(self, "carrier_freq", SPEED_OF_LIGHT / self.wavelength)
        else:
            c = self.wavelength * self.carrier_freq
            if abs(c - SPEED_OF_LIGHT) > 1e-6 * SPEED_OF_LIGHT:
                raise ValueError(
                    f"wavelength*carrier_freq = {c:.6g} m/s is not the speed of light"
                )
        if self.min_spacing is None:
            object.__setattr__(self, "min_spacing", self.wavelength / 2.0)
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")
        if not self.aperture > 0:
            raise ValueError("aperture must be positive")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.min_spacing < 0:
            raise ValueError("min_spacing must be nonnegative")
        needed = (self.n_antennas - 1) * self.min_spacing
        if needed > self.aperture:
            raise ValueError(
                f"infeasible geometry: (N-1)*min_spacing = {needed:.6g} m exceeds "
                f"aperture {self.aperture:.6g} m"
            )


@dataclass(frozen=True)
class PositionVector:
    """Ordered element coordinates x_1 <= ... <= x_N, in meters."""

    coords: np.ndarray

    def __post_init__(self):
        c = _readonly(np.atleast_1d(self.coords))
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coords must be a nonempty 1-D array")
        if np.any(np.diff(c) < 0):
            raise ValueError("coords must be sorted ascending")
        object.__setattr__(self, "coords", c)

    def __len__(self) -> int:
        return self.coords.size

    @property
    def span(self) -> float:
        """Occupied aperture x_N - x_1."""
        return float(self.coords[-1] - self.coords[0])


@dataclass(frozen=True)
class WeightVector:
    """Analog beamformer stored as per-element phases.

    The implied complex weights are (1/sqrt(N)) * exp(j*phase_n); the
    constant-modulus constraint holds by construction.
    """

    phases: np.ndarray

    def __post_init__(self):
        p = _readonly(np.atleast_1d(self.phases))
        if p.ndim != 1 or p.size < 1:
            raise ValueError("phases must be a nonempty 1-D array")
        object.__setattr__(self, "phases", p)

    def __len__(self) -> int:
        return self.phases.size

    @property
    def weights(self) -> np.ndarray:
        """Complex weight vector of modulus 1/sqrt(N) per element."""
        n = self.phases.size
        return np.exp(1j * self.phases) / math.sqrt(n)


@dataclass(frozen=True)
class CoverageSpec:
    """K disjoint angular subregions with per-region sample counts.

    ``subregions`` is a list of (theta_min, theta_max) pairs in radians
    inside [0, pi]; ``samples_per_region`` gives the number of grid points
    for each (>= 2).  When sample counts are omitted the default density is
    roughly one sample per degree (ceil of the width in degrees, plus one).
    """

    subregions: tuple
    samples_per_region: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        regions = tuple((float(lo), float(hi)) for lo, hi in self.subregions)
        if not regions:
            raise ValueError("at least one subregion is required")
        for lo, hi in regions:
            if not (0.0 <= lo < hi <= math.pi):
                raise ValueError(
                    f"subregion [{lo}, {hi}] must satisfy 0 <= lo < hi <= pi"
                )
        ordered = sorted(regions)
        for (_, hi_prev), (lo_next, _) in zip(ordered, ordered[1:]):
            if lo_next <= hi_prev:
                raise ValueError("subregions must be pairwise disjoint")
        if self.samples_per_region is None:
            counts = tuple(_default_samples(lo, hi) for lo, hi in regions)
        else:
            counts = tuple(int(c) for c in self.samples_per_region)
            if len(counts) != len(regions):
                raise ValueError("samples_per_region length must match subregions")
            for c in counts:
                if c < 2:
                    raise ValueError("each region needs at least 2 samples")
        object.__setattr__(self, "subregions", regions)
        object.__setattr__(self, "samples_per_region", counts)

    @classmethod
    def from_degrees(cls, regions_deg, samples=None) -> "CoverageSpec":
        regions = tuple(
            (math.radians(lo), math.radians(hi)) for lo, hi in regions_deg
        )
        return cls(regions, samples)


def _default_samples(lo: float, hi: float) -> int:
    # ~1 sample per degree, endpoints inclusive, never fewer than 2
    width_deg = math.degrees(hi - lo)
    return max(2, int(math.ceil(width_deg)) + 1)


@dataclass(frozen=True)
class SampleGrid:
    """Flat list of sampled angles with the owning region index per sample."""

    angles: np.ndarray
    region_index: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        a = _readonly(np.atleast_1d(self.angles))
        if a.ndim != 1 or a.size < 1:
            raise ValueError("angles must be a nonempty 1-D array")
        if self.region_index is None:
            idx = np.zeros(a.size, dtype=int)
        else:
            idx = np.array(self.region_index, dtype=int, copy=True)
            if idx.shape != a.shape:
                raise ValueError("region_index must match angles in shape")
        idx.flags.writeable = False
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "region_index", idx)

    def __len__(self) -> int:
        return self.angles.size


def discretize(spec: CoverageSpec) -> SampleGrid:
    """Uniformly sample every subregion, endpoints included exactly.

    Sample l (1-based) of region k is theta_min + (l-1)/(L_k-1) * width;
    the last sample is pinned to theta_max so both boundary angles appear
    bit-for-bit in the grid.
    """
    angles = []
    index = []
    for k, ((lo, hi), count) in enumerate(
        zip(spec.subregions, spec.samples_per_region)
    ):
        width = hi - lo
        frac = np.arange(count, dtype=float) / (count - 1)
        theta = lo + frac * width
        theta[0] = lo
        theta[-1] = hi
        angles.append(theta)
        index.append(np.full(count, k, dtype=int))
    return SampleGrid(np.concatenate(angles), np.concatenate(index))


def steering_vector(x: PositionVector, theta: float, wavelength: float) -> np.ndarray:
    """Array response a(x, theta): element n is exp(j*(2*pi/wavelength)*x_n*cos(theta))."""
    coords = x.coords if isinstance(x, PositionVector) else np.asarray(x, dtype=float)
    phase = (2.0 * np.pi / wavelength) * coords * np.cos(theta)
    return np.exp(1j * phase)


def beam_gain(
    w: WeightVector, x: PositionVector, theta: float, wavelength: float
) -> float:
    """Power response |w^H a(x, theta)|^2 toward one angle; lies in [0, N]."""
    a = steering_vector(x, theta, wavelength)
    return float(np.abs(np.vdot(w.weights, a)) ** 2)


def min_gain(
    w: WeightVector, x: PositionVector, grid: SampleGrid, wavelength: float
) -> float:
    """Worst-case beam gain over the sampled angles; the max-min objective."""
    return float(np.min(gain_profile(w, x, grid.angles, wavelength)))


def gain_profile(
    w: WeightVector, x: PositionVector, angles: np.ndarray, wavelength: float
) -> np.ndarray:
    """Beam gain evaluated at every angle of ``angles`` (vectorized)."""
    coords = x.coords if isinstance(x, PositionVector) else np.asarray(x, dtype=float)
    # (n_angles, N) matrix of steering phases
    phase = (2.0 * np.pi / wavelength) * np.outer(np.cos(angles), coords)
    response = np.exp(1j * phase) @ np.conj(w.weights)
    return np.abs(response) ** 2


def is_feasible(
    x: PositionVector, cfg: ArrayConfig, tol: float = 1e-9
) -> tuple[bool, list[str]]:
    """Check box and spacing constraints within ``tol`` meters.

    Returns (ok, violations); each violation message names the constraint
    and its slack (negative means violated by that amount).
    """
    c = x.coords
    violations = []
    if len(c) != cfg.n_antennas:
        violations.append(
            f"element count {len(c)} does not match config N={cfg.n_antennas}"
        )
    lo_slack = float(c[0])
    if lo_slack < -tol:
        violations.append(f"box lower bound: x_1 = {c[0]:.12g} m, slack {lo_slack:.3g}")
    hi_slack = float(cfg.aperture - c[-1])
    if hi_slack < -tol:
        violations.append(
            f"box upper bound: x_N = {c[-1]:.12g} m > D = {cfg.aperture:.12g} m, "
            f"slack {hi_slack:.3g}"
        )
    gaps = np.diff(c)
    for n, g in enumerate(gaps, start=2):
        slack = float(g - cfg.min_spacing)
        if slack < -tol:
            violations.append(
                f"spacing x_{n} - x_{n-1} = {g:.12g} m < d_min = "
                f"{cfg.min_spacing:.12g} m, slack {slack:.3g}"
            )
    return (not violations, violations)
