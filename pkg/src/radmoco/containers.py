"""Shared data containers for radial k-space, images, motion fields and maps.

All containers validate their invariants on construction and are treated as
immutable afterwards (arrays may be shared read-only across workers).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INVALID_STATE = -1


class ShapeError(ValueError):
    """Container fields are mutually inconsistent."""


def _as_array(x, dtype):
    a = np.asarray(x, dtype=dtype)
    return a


@dataclass
class Trajectory:
    """Center-out radial sampling locations in normalized cycles/voxel.

    coords has shape [n_spokes, n_readout, dim]; dcf [n_spokes, n_readout].
    voxel_size (mm per axis) is carried along for physical-unit heuristics.
    """

    dim: int
    coords: np.ndarray
    dcf: np.ndarray | None = None
    voxel_size: tuple[float, ...] | None = None

    def __post_init__(self):
        self.coords = _as_array(self.coords, np.float64)
        if self.coords.ndim != 3 or self.coords.shape[2] != self.dim:
            raise ShapeError(f"coords must be [spokes, readout, {self.dim}]")
        if self.dim not in (2, 3):
            raise ShapeError("dim must be 2 or 3")
        if np.max(np.abs(self.coords)) > 0.5:
            raise ShapeError("trajectory coordinates exceed 0.5 cycles/voxel")
        if np.any(np.abs(self.coords[:, 0, :]) > 1e-12):
            raise ShapeError("readout sample 0 must sit at k = 0 (center-out)")
        if self.dcf is not None:
            self.dcf = _as_array(self.dcf, np.float64)
            if self.dcf.shape != self.coords.shape[:2]:
                raise ShapeError("dcf shape must match [spokes, readout]")
            if np.any(self.dcf < 0):
                raise ShapeError("dcf must be nonnegative")
        if self.voxel_size is not None:
            self.voxel_size = tuple(float(v) for v in self.voxel_size)
            if len(self.voxel_size) != self.dim:
                raise ShapeError("voxel_size length must equal dim")

    @property
    def n_spokes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_readout(self) -> int:
        return self.coords.shape[1]

    def radii(self) -> np.ndarray:
        return np.sqrt(np.sum(self.coords**2, axis=2))

    def subset(self, spoke_idx) -> "Trajectory":
        dcf = None if self.dcf is None else self.dcf[spoke_idx]
        return Trajectory(self.dim, self.coords[spoke_idx], dcf, self.voxel_size)


@dataclass
class RadialKSpace:
    """Multi-coil complex samples on a center-out radial trajectory.

    samples has shape [n_coils, n_spokes, n_readout]; timestamps are seconds
    per spoke, strictly increasing.
    """

    dim: int
    samples: np.ndarray
    timestamps: np.ndarray
    trajectory_ref: str = "traj"

    def __post_init__(self):
        self.samples = _as_array(self.samples, np.complex128)
        self.timestamps = _as_array(self.timestamps, np.float64)
        if self.samples.ndim != 3:
            raise ShapeError("samples must be [coils, spokes, readout]")
        if self.n_spokes < 1 or self.n_readout < 1 or self.n_coils < 1:
            raise ShapeError("empty k-space container")
        if self.timestamps.shape != (self.n_spokes,):
            raise ShapeError("timestamps must have one entry per spoke")
        if self.n_spokes > 1 and np.any(np.diff(self.timestamps) <= 0):
            raise ShapeError("timestamps must be strictly increasing")

    @property
    def n_coils(self) -> int:
        return self.samples.shape[0]

    @property
    def n_spokes(self) -> int:
        return self.samples.shape[1]

    @property
    def n_readout(self) -> int:
        return self.samples.shape[2]

    def subset(self, spoke_idx) -> "RadialKSpace":
        return RadialKSpace(self.dim, self.samples[:, spoke_idx, :],
                            self.timestamps[spoke_idx], self.trajectory_ref)


@dataclass
class GridImage:
    """D-dimensional complex image with voxel-size metadata (mm per axis)."""

    values: np.ndarray
    voxel_size: tuple[float, ...]

    def __post_init__(self):
        self.values = _as_array(self.values, np.complex128)
        if self.values.ndim not in (2, 3):
            raise ShapeError("image must be 2D or 3D")
        if any(n < 4 for n in self.values.shape):
            raise ShapeError("all image axes must have >= 4 voxels")
        self.voxel_size = tuple(float(v) for v in self.voxel_size)
        if len(self.voxel_size) != self.values.ndim:
            raise ShapeError("voxel_size length must match image dim")

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def like(self, values) -> "GridImage":
        return GridImage(values, self.voxel_size)


@dataclass
class MotionField:
    """Per-voxel displacement in voxel units, displacement[axis][voxel...]."""

    displacement: np.ndarray

    def __post_init__(self):
        self.displacement = _as_array(self.displacement, np.float64)
        d = self.displacement
        if d.ndim not in (3, 4) or d.shape[0] != d.ndim - 1:
            raise ShapeError("displacement must be [dim, ...spatial] with matching dim")
        if not np.all(np.isfinite(d)):
            raise ShapeError("displacement must be finite")

    @property
    def dim(self) -> int:
        return self.displacement.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.displacement.shape[1:]


@dataclass
class SensitivityMaps:
    """Per-coil complex spatial sensitivities, values[coil][voxel...]."""

    values: np.ndarray

    def __post_init__(self):
        self.values = _as_array(self.values, np.complex128)
        if self.values.ndim not in (3, 4):
            raise ShapeError("maps must be [coils, ...spatial] (2D or 3D)")
        rss = np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0))
        if np.max(rss) > 1 + 1e-6:
            raise ShapeError("root-sum-of-squares of maps exceeds 1")

    @property
    def n_coils(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[1:]

    def rss(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=0))


@dataclass
class RespiratoryTrace:
    """Per-spoke navigator amplitude, validity flag and motion-state label."""

    values: np.ndarray
    valid: np.ndarray
    state: np.ndarray

    def __post_init__(self):
        self.values = _as_array(self.values, np.float64)
        self.valid = _as_array(self.valid, bool)
        self.state = _as_array(self.state, np.int64)
        n = self.values.shape[0]
        if self.valid.shape != (n,) or self.state.shape != (n,):
            raise ShapeError("values/valid/state lengths disagree")
        if np.any(self.state[~self.valid] != INVALID_STATE):
            raise ShapeError("invalid spokes must carry the sentinel state")
        if np.any(self.state[self.valid] < 0):
            raise ShapeError("valid spokes must carry a nonnegative state")

    @property
    def n_spokes(self) -> int:
        return self.values.shape[0]

    @property
    def range(self) -> float:
        v = self.values[self.valid]
        return float(v.max() - v.min()) if v.size else 0.0

    @property
    def n_states(self) -> int:
        s = self.state[self.valid]
        return int(s.max()) + 1 if s.size else 0


@dataclass
class ReconConfig:
    """Solver hyperparameters shared by the reconstruction entry points."""

    n_states: int = 8
    lambda_s: float = 0.01
    lambda_t: float = 0.02
    tgv_alpha1: float = 1.0
    tgv_alpha0: float = 2.0
    max_iters: int = 60
    tolerance: float = 1e-4
    coarse_factor: float = 1.5
    seed: int = 1234

    def __post_init__(self):
        if self.n_states < 1:
            raise ValueError("n_states must be >= 1")
        if min(self.lambda_s, self.lambda_t, self.tgv_alpha1, self.tgv_alpha0) < 0:
            raise ValueError("regularization weights must be >= 0")
        if self.coarse_factor < 1:
            raise ValueError("coarse_factor must be >= 1")


@dataclass
class MotionResolvedImages:
    """One image per motion state, all on a common (coarse) grid."""

    images: list

    def __post_init__(self):
        if len(self.images) < 1:
            raise ShapeError("need at least one motion state")
        shape = self.images[0].shape
        if any(img.shape != shape for img in self.images):
            raise ShapeError("all motion states must share a shape")

    @property
    def m(self) -> int:
        return len(self.images)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.images[0].shape

    def stack(self) -> np.ndarray:
        return np.stack([img.values for img in self.images])


@dataclass
class RegularizerSpec:
    """Regularizer combination for the motion-resolved solve.

    variant: "s1" temporal TV only, "s2" adds spatial TV, "s3" adds a
    spatial l1-wavelet term.
    """

    variant: str = "s3"
    lambda_s: float = 0.01
    lambda_t: float = 0.02

    def __post_init__(self):
        if self.variant not in ("s1", "s2", "s3"):
            raise ValueError("variant must be one of s1, s2, s3")
        if self.lambda_s < 0 or self.lambda_t < 0:
            raise ValueError("weights must be >= 0")


@dataclass
class PyramidSchedule:
    """Coarse-to-fine schedule for the non-rigid registration."""

    levels: int = 4
    iters_per_level: int = 25
    smoothing_sigma: float = 1.5

    def __post_init__(self):
        if self.levels < 1 or self.iters_per_level < 1:
            raise ValueError("levels and iters_per_level must be >= 1")
        if self.smoothing_sigma <= 0:
            raise ValueError("smoothing_sigma must be > 0")


@dataclass
class TGVParams:
    """Weights of the two second-order TGV terms."""

    alpha1: float = 1.0
    alpha0: float = 2.0

    def __post_init__(self):
        if self.alpha1 <= 0 or self.alpha0 <= 0:
            raise ValueError("TGV weights must be > 0")


@dataclass
class SolverReport:
    """Objective trace of an iterative solve."""

    iterations: int
    objective: list = field(default_factory=list)
    final_relative_change: float = float("nan")
    converged: bool = False

    def __post_init__(self):
        if not np.all(np.isfinite(self.objective)):
            raise ValueError("objective trace contains non-finite values")


@dataclass
class RoiSet:
    """Named voxel masks used by the image-quality metrics."""

    airway: np.ndarray
    parenchyma: np.ndarray
    aorta_analog: np.ndarray
    liver: np.ndarray
    background: np.ndarray

    def __post_init__(self):
        for name in ("airway", "parenchyma", "aorta_analog", "liver", "background"):
            mask = _as_array(getattr(self, name), bool)
            setattr(self, name, mask)
            if not mask.any():
                raise ShapeError(f"ROI '{name}' is empty")
        body = self.airway | self.parenchyma | self.aorta_analog | self.liver
        if np.any(body & self.background):
            raise ShapeError("background ROI overlaps body ROIs")
