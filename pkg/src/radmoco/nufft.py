"""Non-uniform Fourier operator via Kaiser-Bessel gridding.

The forward operator approximates the nonuniform DFT

    s(k) = sum_x img(x) * exp(-2j*pi * k . (x - c)),   c = shape // 2,

with k in cycles/voxel. The adjoint is the exact conjugate transpose of the
implemented forward (same kernel, deapodization applied on the image side in
both directions), which iterative solvers rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.fft import fftn, fftshift, ifftn, ifftshift
from scipy.special import i0

from .containers import SensitivityMaps, Trajectory


class LinOp:
    """Minimal linear-operator handle: paired forward/adjoint callables."""

    def __init__(self, forward, adjoint):
        self.forward = forward
        self.adjoint = adjoint


def kb_beta(width: float, oversampling: float) -> float:
    """Kaiser-Bessel shape parameter from the aliasing-minimization formula."""
    a = oversampling
    return np.pi * np.sqrt(width**2 / a**2 * (a - 0.5) ** 2 - 0.8)


def kb_kernel(u, width: float, beta: float):
    """Kernel value at offset u (oversampled-grid samples from the center)."""
    u = np.asarray(u, dtype=np.float64)
    inside = np.abs(u) <= width / 2
    arg = np.zeros_like(u)
    arg[inside] = beta * np.sqrt(1 - (2 * u[inside] / width) ** 2)
    return np.where(inside, i0(arg), 0.0)


def kb_transform(f, width: float, beta: float):
    """Continuous image-domain transform of the kernel at frequency f.

    f is in cycles per oversampled-grid sample; the analytic pair of the
    Kaiser-Bessel window is width * sinh(z)/z with z = sqrt(beta^2-(pi*W*f)^2)
    (the sin branch when the argument turns negative).
    """
    z2 = beta**2 - (np.pi * width * np.asarray(f, dtype=np.float64)) ** 2
    z = np.sqrt(np.abs(z2))
    z = np.where(z < 1e-12, 1e-12, z)
    val = np.where(z2 >= 0, np.sinh(z) / z, np.sin(z) / z)
    return width * val


def _cfft(x, axes):
    return fftshift(fftn(ifftshift(x, axes=axes), axes=axes, workers=1), axes=axes)


def _cfft_adjoint(y, axes):
    n = np.prod([y.shape[a] for a in axes])
    out = fftshift(ifftn(ifftshift(y, axes=axes), axes=axes, workers=1), axes=axes)
    return out * n


@dataclass
class GriddingPlan:
    shape: tuple
    os_shape: tuple
    oversampling: float
    width: int
    beta: float
    deapod_inv: np.ndarray        # 1 / image-domain kernel response, native grid
    interp: sp.csr_matrix         # [n_samples, prod(os_shape)]
    n_spokes: int
    n_readout: int
    trajectory: Trajectory

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def n_samples(self) -> int:
        return self.n_spokes * self.n_readout


def _values_of(img):
    return img.values if hasattr(img, "values") else np.asarray(img)


def plan(traj: Trajectory, shape, oversampling: float = 2.0,
         width: int = 4) -> GriddingPlan:
    """Build a gridding plan for the given trajectory and image shape."""
    shape = tuple(int(n) for n in shape)
    if len(shape) != traj.dim:
        raise ValueError("image shape dimensionality must match trajectory")
    if any(n % 2 for n in shape):
        raise ValueError("grid sizes must be even")
    if oversampling < 1.25 or width < 3:
        raise ValueError("need oversampling >= 1.25 and kernel width >= 3")
    if np.max(traj.coords) >= 0.5 or np.min(traj.coords) < -0.5:
        raise ValueError("trajectory coordinates must lie in [-0.5, 0.5)")
    beta = kb_beta(width, oversampling)
    os_shape = tuple(int(np.ceil(oversampling * n / 2) * 2) for n in shape)

    deapod = np.ones(shape)
    for ax, (n, g) in enumerate(zip(shape, os_shape)):
        f = (np.arange(n) - n // 2) / g
        resp = kb_transform(f, width, beta)
        deapod = deapod * resp.reshape([-1 if a == ax else 1 for a in range(len(shape))])

    interp = _build_interp(traj.coords.reshape(-1, traj.dim), os_shape, width, beta)
    return GriddingPlan(shape, os_shape, oversampling, width, beta,
                        1.0 / deapod, interp, traj.n_spokes, traj.n_readout, traj)


_KB_TABLE_POINTS = 4096


def _kernel_lut(width: float, beta: float):
    u = np.linspace(0.0, width / 2, _KB_TABLE_POINTS)
    return u, kb_kernel(u, width, beta)


def _build_interp(coords, os_shape, width, beta) -> sp.csr_matrix:
    """Sparse interpolation matrix from the oversampled grid to the samples."""
    n = coords.shape[0]
    dim = coords.shape[1]
    lut_u, lut_v = _kernel_lut(width, beta)
    per_axis_idx = []
    per_axis_w = []
    offsets = np.arange(width)
    for ax in range(dim):
        g = os_shape[ax]
        # array index g//2 of the centered spectrum holds frequency zero
        kappa = coords[:, ax] * g + g // 2
        base = np.ceil(kappa - width / 2.0).astype(np.int64)
        grid = base[:, None] + offsets[None, :]          # [n, width]
        w = np.interp(np.abs(kappa[:, None] - grid), lut_u, lut_v, right=0.0)
        per_axis_idx.append(np.mod(grid, g))
        per_axis_w.append(w)
    # outer product over axes -> width^dim neighbors per sample
    idx = per_axis_idx[0]
    wgt = per_axis_w[0]
    for ax in range(1, dim):
        idx = idx[:, :, None] * os_shape[ax] + per_axis_idx[ax][:, None, :]
        idx = idx.reshape(n, -1)
        wgt = (wgt[:, :, None] * per_axis_w[ax][:, None, :]).reshape(n, -1)
    nnz_per_row = wgt.shape[1]
    indptr = np.arange(n + 1, dtype=np.int64) * nnz_per_row
    mat = sp.csr_matrix((wgt.ravel(), idx.ravel(), indptr),
                        shape=(n, int(np.prod(os_shape))))
    return mat


def plan_subset(p: GriddingPlan, spoke_idx) -> GriddingPlan:
    """Plan restricted to a subset of spokes, sharing the parent's tables."""
    spoke_idx = np.asarray(spoke_idx)
    rows = (spoke_idx[:, None] * p.n_readout + np.arange(p.n_readout)[None, :]).ravel()
    return GriddingPlan(p.shape, p.os_shape, p.oversampling, p.width, p.beta,
                        p.deapod_inv, p.interp[rows], len(spoke_idx),
                        p.n_readout, p.trajectory.subset(spoke_idx))


def forward(p: GriddingPlan, img) -> np.ndarray:
    """NUFFT of one image; returns complex samples [n_spokes, n_readout]."""
    vals = _values_of(img)
    if vals.shape != p.shape:
        raise ValueError("image shape does not match plan")
    return forward_batch(p, vals[None])[0]


def forward_batch(p: GriddingPlan, imgs: np.ndarray) -> np.ndarray:
    """NUFFT of a stack of images [batch, *shape] in one pass."""
    if imgs.shape[1:] != p.shape:
        raise ValueError("image shape does not match plan")
    b = imgs.shape[0]
    y = imgs * p.deapod_inv[None]
    padded = np.zeros((b,) + p.os_shape, dtype=np.complex128)
    sl = tuple(slice((g - n) // 2, (g - n) // 2 + n)
               for n, g in zip(p.shape, p.os_shape))
    padded[(slice(None),) + sl] = y
    spec = _cfft(padded, axes=tuple(range(1, padded.ndim)))
    flat = p.interp @ spec.reshape(b, -1).T                 # [n_samples, b]
    return np.ascontiguousarray(flat.T).reshape(b, p.n_spokes, p.n_readout)


def adjoint(p: GriddingPlan, samples: np.ndarray, dcf: np.ndarray | None = None) -> np.ndarray:
    """Exact adjoint of forward; optionally pre-weights samples by dcf."""
    return adjoint_batch(p, np.asarray(samples)[None], dcf)[0]


def adjoint_batch(p: GriddingPlan, samples: np.ndarray,
                  dcf: np.ndarray | None = None) -> np.ndarray:
    if samples.shape[1:] != (p.n_spokes, p.n_readout):
        raise ValueError("sample count does not match plan trajectory")
    b = samples.shape[0]
    y = samples.reshape(b, -1)
    if dcf is not None:
        y = y * np.asarray(dcf).reshape(1, -1)
    grid = (p.interp.T @ y.T).T.reshape((b,) + p.os_shape)
    img = _cfft_adjoint(grid, axes=tuple(range(1, grid.ndim)))
    sl = tuple(slice((g - n) // 2, (g - n) // 2 + n)
               for n, g in zip(p.shape, p.os_shape))
    return img[(slice(None),) + sl] * p.deapod_inv[None]


def sense_forward(p: GriddingPlan, maps: SensitivityMaps, img) -> np.ndarray:
    """Coil-weighted NUFFT: samples [coil, spoke, readout]."""
    vals = _values_of(img)
    if maps.shape != p.shape:
        raise ValueError("map shape does not match plan")
    return forward_batch(p, maps.values * vals[None])


def sense_adjoint(p: GriddingPlan, maps: SensitivityMaps, samples: np.ndarray,
                  dcf: np.ndarray | None = None) -> np.ndarray:
    """Adjoint of sense_forward: conjugate-map weighted sum over coils."""
    if samples.shape[0] != maps.n_coils:
        raise ValueError("coil count mismatch between samples and maps")
    coil_imgs = adjoint_batch(p, samples, dcf)
    return np.sum(np.conj(maps.values) * coil_imgs, axis=0)


def operator_norm(op, shape, iters: int = 30, seed: int = 0,
                  tol: float = 1e-3) -> float:
    """Power-iteration estimate of the spectral norm of a linear operator.

    op must expose forward/adjoint (a LinOp or any object with those
    attributes); shape is the primal domain shape.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0
    x = x / nx
    sigma = 0.0
    for _ in range(iters):
        y = op.forward(x)
        ny = float(np.linalg.norm(y))
        if ny == 0:
            return 0.0
        x = op.adjoint(y)
        nx = float(np.linalg.norm(x))
        new_sigma = np.sqrt(nx)
        if sigma > 0 and abs(new_sigma - sigma) <= tol * sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
        if nx == 0:
            return 0.0
        x = x / nx
    return float(sigma)
