"""Golden-angle center-out radial trajectories and density compensation."""

from __future__ import annotations

import numpy as np

from .containers import Trajectory

GOLDEN_RATIO = (1 + np.sqrt(5.0)) / 2
GOLDEN_ANGLE_DEG = 180.0 / GOLDEN_RATIO
# 2D golden means: phi2 is the real root of x^3 + x = 1, phi1 = phi2^2.
GOLDEN_MEAN_1 = 0.4655712318767680
GOLDEN_MEAN_2 = 0.6823278038280193


def _check_counts(n_spokes: int, n_readout: int, k_max: float) -> None:
    if n_spokes < 1:
        raise ValueError("n_spokes must be >= 1")
    if n_readout < 2:
        raise ValueError("n_readout must be >= 2")
    if not 0 < k_max <= 0.5:
        raise ValueError("k_max must lie in (0, 0.5]")


def _radii(n_readout: int, k_max: float) -> np.ndarray:
    return np.arange(n_readout) * (k_max / (n_readout - 1))


def golden_angle_2d(n_spokes: int, n_readout: int, k_max: float = 0.5,
                    voxel_size=None) -> Trajectory:
    """Center-out 2D radial spokes with azimuth s * 180/golden-ratio degrees."""
    _check_counts(n_spokes, n_readout, k_max)
    theta = np.deg2rad(np.arange(n_spokes) * GOLDEN_ANGLE_DEG % 360.0)
    r = _radii(n_readout, k_max)
    coords = np.empty((n_spokes, n_readout, 2))
    coords[:, :, 0] = np.cos(theta)[:, None] * r[None, :]
    coords[:, :, 1] = np.sin(theta)[:, None] * r[None, :]
    # guard the exact-boundary sample: coords must stay within [-0.5, 0.5)
    np.clip(coords, -0.5, np.nextafter(0.5, 0), out=coords)
    coords[:, 0, :] = 0.0
    return density_compensation(Trajectory(2, coords, voxel_size=voxel_size))


def golden_means_3d(n_spokes: int, n_readout: int, k_max: float = 0.5,
                    voxel_size=None) -> Trajectory:
    """Center-out 3D radial spokes from the 2D golden-means increments."""
    _check_counts(n_spokes, n_readout, k_max)
    s = np.arange(n_spokes)
    z = 2.0 * np.mod(s * GOLDEN_MEAN_1, 1.0) - 1.0
    az = 2 * np.pi * np.mod(s * GOLDEN_MEAN_2, 1.0)
    rho = np.sqrt(np.maximum(0.0, 1.0 - z**2))
    direction = np.stack([rho * np.cos(az), rho * np.sin(az), z], axis=1)
    r = _radii(n_readout, k_max)
    coords = direction[:, None, :] * r[None, :, None]
    np.clip(coords, -0.5, np.nextafter(0.5, 0), out=coords)
    coords[:, 0, :] = 0.0
    return density_compensation(Trajectory(3, coords, voxel_size=voxel_size))


def _dirichlet_row_sum(k: np.ndarray, n: int) -> np.ndarray:
    """sum_x exp(2j*pi*k*(x - n//2)) over x = 0..n-1 for even n."""
    k = np.asarray(k, dtype=np.float64)
    den = np.sin(np.pi * k)
    small = np.abs(den) < 1e-14
    num = np.sin(np.pi * k * n)
    ratio = np.where(small, float(n), num / np.where(small, 1.0, den))
    return ratio * np.exp(-1j * np.pi * k)


def density_compensation(traj: Trajectory,
                         center_weight: str = "calibrated") -> Trajectory:
    """Fill the analytic radial-ramp density compensation weights.

    Weights equal the k-space cell measure per sample: for spacing dr along
    the readout, sample j carries the annulus (2D) or shell (3D) slice
    r_j^(dim-1) * dr * solid-angle / n_spokes, which makes the passband gain
    of adjoint-of-forward approximately one for smooth objects.

    The repeated k = 0 samples need a separate rule. "calibrated" (default)
    solves for the center weight that makes adjoint-then-forward of a
    centered delta return exactly 1 at k = 0 on the grid matched to the
    radial spacing (all spokes alias onto one Cartesian cell, so the annulus
    measure does not apply there). "half-annulus" assigns half the first
    annulus value instead; that convention overweights the mean by ~pi and
    is kept only for comparison.
    """
    r = traj.radii()
    dr = float(np.max(r[:, 1])) if traj.n_readout > 1 else 1.0
    if traj.dim == 2:
        ring = 2 * np.pi * r * dr
    else:
        ring = 4 * np.pi * r**2 * dr
    dcf = ring / traj.n_spokes
    if traj.n_readout == 1:
        dcf[:, 0] = 1.0
    elif center_weight == "half-annulus":
        dcf[:, 0] = 0.5 * dcf[:, 1]
    elif center_weight == "calibrated":
        n_nom = max(4, int(round(0.5 / dr)) * 2)
        resp = np.ones(traj.n_spokes * traj.n_readout, dtype=np.complex128)
        for ax in range(traj.dim):
            resp *= _dirichlet_row_sum(traj.coords[..., ax].ravel(), n_nom)
        resp = resp.reshape(traj.n_spokes, traj.n_readout)
        rest = float(np.sum(dcf[:, 1:] * resp[:, 1:].real))
        total_dc = max(0.0, 1.0 - rest) / float(n_nom**traj.dim)
        dcf[:, 0] = total_dc / traj.n_spokes
    else:
        raise ValueError("center_weight must be 'calibrated' or 'half-annulus'")
    return Trajectory(traj.dim, traj.coords, dcf, traj.voxel_size)


def scale_to_grid(traj: Trajectory, native_shape, target_shape) -> tuple[Trajectory, np.ndarray]:
    """Rescale a trajectory from its native grid to a coarser grid.

    Coordinates are converted to cycles per target voxel; samples that fall
    outside [-0.5, 0.5) are dropped. Returns the rescaled trajectory (dcf
    mass rescaled to the new cell measure) and the boolean keep-mask over
    [spoke, readout] needed to subset sample arrays consistently.
    """
    ratio = np.asarray(native_shape, dtype=float) / np.asarray(target_shape, dtype=float)
    if np.any(ratio < 1):
        raise ValueError("target grid must be coarser than or equal to native")
    coords = traj.coords * ratio[None, None, :]
    keep = np.all(np.abs(coords) < 0.5, axis=2)
    keep[:, 0] = True
    coords = np.where(keep[:, :, None], coords, 0.0)
    dcf = traj.dcf * float(np.prod(ratio)) if traj.dcf is not None else None
    if dcf is not None:
        dcf = np.where(keep, dcf, 0.0)
    voxel = None
    if traj.voxel_size is not None:
        voxel = tuple(v * q for v, q in zip(traj.voxel_size, ratio))
    return Trajectory(traj.dim, coords, dcf, voxel), keep
