"""Binary and text file formats.

All binary payloads are little-endian: float32 for samples, trajectories and
displacements (complex stored as interleaved re, im), float64 for timestamps.
Round trips are bit-exact at those widths.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .containers import (
    GridImage,
    MotionField,
    RadialKSpace,
    RespiratoryTrace,
    ShapeError,
    Trajectory,
)

RKS_MAGIC = b"RKS1"
MFD_MAGIC = b"MFD1"
CIMG_MAGIC = b"CIM1"
TRACE_HEADER = "spoke,time_s,value,valid,state"


class FormatError(IOError):
    """File does not parse as the expected container format."""


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError("file truncated")
    return buf


def _read_array(fh, dtype, count: int) -> np.ndarray:
    dt = np.dtype(dtype)
    return np.frombuffer(_read_exact(fh, dt.itemsize * count), dtype=dt)


def write_kspace(data: RadialKSpace, trajectory: Trajectory, path) -> None:
    """Write k-space samples plus their trajectory to an RKS container."""
    if trajectory.coords.shape[:2] != (data.n_spokes, data.n_readout):
        raise ShapeError("k-space and trajectory sample counts disagree")
    if trajectory.dim != data.dim:
        raise ShapeError("k-space and trajectory dimensionality disagree")
    voxel = trajectory.voxel_size or (1.0,) * data.dim
    inter = np.empty(data.samples.shape + (2,), dtype="<f4")
    inter[..., 0] = data.samples.real
    inter[..., 1] = data.samples.imag
    with open(path, "wb") as fh:
        fh.write(RKS_MAGIC)
        fh.write(struct.pack("<4I", data.dim, data.n_coils, data.n_spokes,
                             data.n_readout))
        fh.write(np.asarray(voxel, dtype="<f4").tobytes())
        fh.write(np.asarray(trajectory.coords, dtype="<f4").tobytes())
        fh.write(np.asarray(data.timestamps, dtype="<f8").tobytes())
        fh.write(inter.tobytes())


def read_kspace(path) -> tuple[RadialKSpace, Trajectory]:
    """Read an RKS container; dcf is refilled analytically by the caller."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != RKS_MAGIC:
            raise FormatError("bad magic (expected RKS1)")
        dim, n_coils, n_spokes, n_readout = struct.unpack("<4I", _read_exact(fh, 16))
        if dim not in (2, 3) or min(n_coils, n_spokes, n_readout) < 1:
            raise FormatError("inconsistent RKS header")
        voxel = _read_array(fh, "<f4", dim).astype(np.float64)
        coords = _read_array(fh, "<f4", n_spokes * n_readout * dim)
        coords = coords.astype(np.float64).reshape(n_spokes, n_readout, dim)
        ts = _read_array(fh, "<f8", n_spokes).astype(np.float64)
        flat = _read_array(fh, "<f4", n_coils * n_spokes * n_readout * 2)
        if fh.read(1):
            raise FormatError("trailing bytes after RKS payload")
    flat = flat.astype(np.float64).reshape(n_coils, n_spokes, n_readout, 2)
    samples = flat[..., 0] + 1j * flat[..., 1]
    traj = Trajectory(dim, coords, voxel_size=tuple(voxel))
    return RadialKSpace(dim, samples, ts), traj


def write_motion_field(field: MotionField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MFD_MAGIC)
        fh.write(struct.pack("<I", field.dim))
        fh.write(np.asarray(field.shape, dtype="<u4").tobytes())
        fh.write(np.asarray(field.displacement, dtype="<f4").tobytes())


def read_motion_field(path) -> MotionField:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MFD_MAGIC:
            raise FormatError("bad magic (expected MFD1)")
        (dim,) = struct.unpack("<I", _read_exact(fh, 4))
        if dim not in (2, 3):
            raise FormatError("inconsistent MFD header")
        shape = tuple(_read_array(fh, "<u4", dim).astype(int))
        disp = _read_array(fh, "<f4", dim * int(np.prod(shape)))
        if fh.read(1):
            raise FormatError("trailing bytes after MFD payload")
    return MotionField(disp.astype(np.float64).reshape((dim,) + shape))


def write_trace(trace: RespiratoryTrace, timestamps, path) -> None:
    lines = [TRACE_HEADER]
    for s in range(trace.n_spokes):
        lines.append("%d,%.9g,%.12g,%d,%d" % (
            s, timestamps[s], trace.values[s], int(trace.valid[s]),
            trace.state[s]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> tuple[RespiratoryTrace, np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != TRACE_HEADER:
        raise FormatError("bad respiratory trace header")
    ts, values, valid, state = [], [], [], []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 5:
            raise FormatError("malformed trace row")
        ts.append(float(parts[1]))
        values.append(float(parts[2]))
        valid.append(bool(int(parts[3])))
        state.append(int(parts[4]))
    trace = RespiratoryTrace(np.array(values), np.array(valid), np.array(state))
    return trace, np.array(ts)


def _sidecar_text(img: GridImage) -> str:
    return ("dim=%d\nshape=%s\nvoxel_size=%s\n" % (
        img.dim,
        ",".join(str(n) for n in img.shape),
        ",".join("%.9g" % v for v in img.voxel_size)))


def export_image(img: GridImage, path, window=None) -> None:
    """Write float32 magnitude raw + text sidecar + one 8-bit P5 map per slice.

    window is an optional (lo, hi) intensity range; defaults to the magnitude
    min/max. Slices are taken along axis 0 for 3D images.
    """
    mag = img.magnitude()
    if not np.all(np.isfinite(mag)):
        raise ValueError("image must be finite for export")
    base = Path(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    base.with_suffix(".raw").write_bytes(mag.astype("<f4").tobytes())
    base.with_suffix(".txt").write_text(_sidecar_text(img))
    lo, hi = window if window is not None else (float(mag.min()), float(mag.max()))
    span = hi - lo
    grey = np.zeros_like(mag) if span <= 0 else np.clip((mag - lo) / span, 0, 1)
    grey = np.round(grey * 255).astype(np.uint8)
    slices = grey[None] if img.dim == 2 else grey
    for i, sl in enumerate(slices):
        name = base.with_suffix(".pgm") if img.dim == 2 else \
            base.parent / (base.stem + "_slice%03d.pgm" % i)
        with open(name, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (sl.shape[1], sl.shape[0]))
            fh.write(sl.tobytes())


def read_image(path) -> GridImage:
    """Read a magnitude raw + sidecar pair back as a real-valued image."""
    base = Path(path)
    meta = {}
    for line in base.with_suffix(".txt").read_text().splitlines():
        key, _, val = line.partition("=")
        meta[key.strip()] = val.strip()
    try:
        shape = tuple(int(s) for s in meta["shape"].split(","))
        voxel = tuple(float(s) for s in meta["voxel_size"].split(","))
    except (KeyError, ValueError) as exc:
        raise FormatError("bad image sidecar") from exc
    raw = np.frombuffer(base.with_suffix(".raw").read_bytes(), dtype="<f4")
    if raw.size != int(np.prod(shape)):
        raise FormatError("raw image size disagrees with sidecar shape")
    return GridImage(raw.astype(np.float64).reshape(shape), voxel)


def write_complex_image(img: GridImage, path) -> None:
    """Lossless complex float32 container for pipeline intermediates."""
    with open(path, "wb") as fh:
        fh.write(CIMG_MAGIC)
        fh.write(struct.pack("<I", img.dim))
        fh.write(np.asarray(img.shape, dtype="<u4").tobytes())
        fh.write(np.asarray(img.voxel_size, dtype="<f4").tobytes())
        inter = np.empty(img.shape + (2,), dtype="<f4")
        inter[..., 0] = img.values.real
        inter[..., 1] = img.values.imag
        fh.write(inter.tobytes())


def read_complex_image(path) -> GridImage:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != CIMG_MAGIC:
            raise FormatError("bad magic (expected CIM1)")
        (dim,) = struct.unpack("<I", _read_exact(fh, 4))
        if dim not in (2, 3):
            raise FormatError("inconsistent CIM header")
        shape = tuple(_read_array(fh, "<u4", dim).astype(int))
        voxel = tuple(_read_array(fh, "<f4", dim).astype(float))
        flat = _read_array(fh, "<f4", 2 * int(np.prod(shape)))
    flat = flat.astype(np.float64).reshape(shape + (2,))
    return GridImage(flat[..., 0] + 1j * flat[..., 1], voxel)


def write_maps(values: np.ndarray, voxel_size, path) -> None:
    """Persist per-coil complex maps (coil axis first) as stacked CIM blocks."""
    with open(path, "wb") as fh:
        fh.write(b"SMP1")
        fh.write(struct.pack("<2I", values.shape[0], values.ndim - 1))
        fh.write(np.asarray(values.shape[1:], dtype="<u4").tobytes())
        fh.write(np.asarray(voxel_size, dtype="<f4").tobytes())
        inter = np.empty(values.shape + (2,), dtype="<f4")
        inter[..., 0] = values.real
        inter[..., 1] = values.imag
        fh.write(inter.tobytes())


def read_maps(path) -> tuple[np.ndarray, tuple[float, ...]]:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != b"SMP1":
            raise FormatError("bad magic (expected SMP1)")
        n_coils, dim = struct.unpack("<2I", _read_exact(fh, 8))
        shape = tuple(_read_array(fh, "<u4", dim).astype(int))
        voxel = tuple(_read_array(fh, "<f4", dim).astype(float))
        flat = _read_array(fh, "<f4", 2 * n_coils * int(np.prod(shape)))
    flat = flat.astype(np.float64).reshape((n_coils,) + shape + (2,))
    return flat[..., 0] + 1j * flat[..., 1], voxel


def write_masks(masks: dict, path) -> None:
    """Labeled uint8 volume (one label per mask) + text legend sidecar."""
    base = Path(path)
    names = sorted(masks)
    shape = masks[names[0]].shape
    label = np.zeros(shape, dtype=np.uint8)
    for i, name in enumerate(names, start=1):
        label[masks[name].astype(bool)] = i
    base.with_suffix(".raw").write_bytes(label.tobytes())
    legend = ["shape=" + ",".join(str(n) for n in shape)]
    legend += ["%d=%s" % (i, name) for i, name in enumerate(names, start=1)]
    base.with_suffix(".txt").write_text("\n".join(legend) + "\n")


def read_masks(path) -> dict:
    base = Path(path)
    lines = base.with_suffix(".txt").read_text().splitlines()
    shape = tuple(int(s) for s in lines[0].split("=")[1].split(","))
    label = np.frombuffer(base.with_suffix(".raw").read_bytes(), dtype=np.uint8)
    label = label.reshape(shape)
    masks = {}
    for line in lines[1:]:
        idx, _, name = line.partition("=")
        masks[name] = label == int(idx)
    return masks
