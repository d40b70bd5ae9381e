"""Cubic voxel grids, centered 3-D spectra, and synthetic test fields.

A :class:`Volume` samples a function of R^3 on an ``N^3`` grid with coordinates
``x_i = origin + i * spacing`` along each axis; the default origin centers the
grid so that index ``N // 2`` sits at 0.  Fourier transforms use the unitary
``exp(-2 pi i w . x)`` convention, so a standard Gaussian ``exp(-pi |x|^2)`` is
its own transform.  :class:`Spectrum3D` stores the transform on the centered
frequency lattice ``w_k = (k - N // 2) / (N * spacing)``.

The scale-translation-rotation representation ``apply_pi`` acts on volumes by

    (pi(g) f)(x) = a^(-3/2) f(a^-1 R^-1 (x - b)),

which is unitary for the L2 norm; it is realized by trilinear resampling with
zero extension outside the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import GeometryMismatch, SupportOverflow
from .group import GroupElement, inverse

# A Gaussian bump is treated as numerically supported within 3.5 standard
# "pi-widths": exp(-pi * 3.5^2) ~ 2e-17 is below every tolerance used here for
# unit-amplitude data, while leaving room to shift bumps off-center on the
# default grids.
SUPPORT_DECAY_RADII = 3.5


@dataclass
class Volume:
    """Scalar field on a cubic grid.

    ``support_radius`` (optional) records the radius of a ball around the
    coordinate origin outside which the field is numerically negligible;
    constructors of synthetic fields set it so downstream sampling geometries
    can be validated against it.
    """

    data: np.ndarray
    spacing: float
    origin: np.ndarray = field(default=None)  # type: ignore[assignment]
    support_radius: float | None = None

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 3 or len(set(self.data.shape)) != 1:
            raise GeometryMismatch(f"volume data must be N^3, got shape {self.data.shape}")
        self.spacing = float(self.spacing)
        if self.spacing <= 0.0:
            raise ValueError("spacing must be positive")
        if self.origin is None:
            self.origin = np.full(3, -(self.n // 2) * self.spacing)
        else:
            self.origin = np.asarray(self.origin, dtype=float).reshape(3)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def half_extent(self) -> float:
        """Half the physical edge length of the grid cube."""
        return 0.5 * self.n * self.spacing

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.n)

    def coordinate_grid(self) -> np.ndarray:
        """All voxel coordinates as an (N, N, N, 3) array (index order x, y, z)."""
        x, y, z = (self.axis_coords(i) for i in range(3))
        return np.stack(np.meshgrid(x, y, z, indexing="ij"), axis=-1)

    def same_grid(self, other: "Volume") -> bool:
        return (
            self.n == other.n
            and abs(self.spacing - other.spacing) < 1e-12
            and bool(np.all(np.abs(self.origin - other.origin) < 1e-12))
        )


def l2_norm(v: Volume) -> float:
    """Grid approximation ``sqrt(h^3 sum f^2)`` of the L2 norm."""
    return float(np.sqrt(v.spacing**3 * np.sum(v.data * v.data)))


def inner(v1: Volume, v2: Volume) -> float:
    """Grid approximation of the L2 inner product; grids must match."""
    if not v1.same_grid(v2):
        raise GeometryMismatch("volumes live on different grids")
    return float(v1.spacing**3 * np.sum(v1.data * v2.data))


@dataclass
class Spectrum3D:
    """Centered 3-D spectrum: index ``k`` holds frequency ``(k - N // 2) * freq_spacing``."""

    data: np.ndarray
    freq_spacing: float
    spatial_spacing: float
    spatial_origin: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 3 or len(set(self.data.shape)) != 1:
            raise GeometryMismatch(f"spectrum data must be N^3, got shape {self.data.shape}")
        self.freq_spacing = float(self.freq_spacing)
        self.spatial_spacing = float(self.spatial_spacing)
        self.spatial_origin = np.asarray(self.spatial_origin, dtype=float).reshape(3)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def freq_axis(self) -> np.ndarray:
        n = self.n
        return (np.arange(n) - n // 2) * self.freq_spacing


def _origin_phase(n: int, freq_spacing: float, origin: np.ndarray, sign: float) -> list[np.ndarray]:
    k = np.arange(n) - n // 2
    return [np.exp(sign * 2j * np.pi * freq_spacing * k * origin[axis]) for axis in range(3)]


def dft3(v: Volume) -> Spectrum3D:
    """Unitary-convention Fourier transform ``h^3 sum f(x) exp(-2 pi i w . x)``."""
    n = v.n
    dfreq = 1.0 / (n * v.spacing)
    spec = np.fft.fftshift(np.fft.fftn(v.data))
    px, py, pz = _origin_phase(n, dfreq, v.origin, -1.0)
    spec = spec * (v.spacing**3) * px[:, None, None] * py[None, :, None] * pz[None, None, :]
    return Spectrum3D(spec, dfreq, v.spacing, v.origin)


def idft3(s: Spectrum3D) -> Volume:
    """Inverse of :func:`dft3`; returns the real part of the reconstruction."""
    n = s.n
    px, py, pz = _origin_phase(n, s.freq_spacing, s.spatial_origin, +1.0)
    spec = s.data * px[:, None, None] * py[None, :, None] * pz[None, None, :]
    spec /= s.spatial_spacing**3
    data = np.fft.ifftn(np.fft.ifftshift(spec))
    return Volume(data.real, s.spatial_spacing, s.spatial_origin.copy())


def gaussian_phantom(
    n: int,
    spacing: float,
    center: np.ndarray = (0.0, 0.0, 0.0),
    scale: float = 1.0,
    amplitude: float = 1.0,
) -> Volume:
    """Gaussian bump ``amplitude * exp(-pi |x - center|^2 / scale^2)``.

    Raises :class:`SupportOverflow` when the bump does not decay to numerical
    zero before reaching the grid boundary.
    """
    return gaussian_mixture_phantom(n, spacing, [center], [scale], [amplitude])


def gaussian_mixture_phantom(
    n: int,
    spacing: float,
    centers,
    scales,
    amplitudes,
) -> Volume:
    """Sum of Gaussian bumps; support metadata covers every component."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    scales = np.asarray(scales, dtype=float).reshape(-1)
    amplitudes = np.asarray(amplitudes, dtype=float).reshape(-1)
    if not (len(centers) == len(scales) == len(amplitudes)):
        raise ValueError("centers, scales, amplitudes must have equal length")

    out = Volume(np.zeros((n, n, n)), spacing)
    lo = out.origin
    hi = out.origin + (n - 1) * spacing
    for c, s in zip(centers, scales):
        margin = min(float(np.min(c - lo)), float(np.min(hi - c)))
        if margin < SUPPORT_DECAY_RADII * s:
            raise SupportOverflow(
                f"bump at {c} with scale {s} reaches within {margin:.3g} of the "
                f"grid boundary (needs {SUPPORT_DECAY_RADII * s:.3g})"
            )
    grid = out.coordinate_grid()
    for c, s, amp in zip(centers, scales, amplitudes):
        d2 = np.sum((grid - c) ** 2, axis=-1)
        out.data += amp * np.exp(-np.pi * d2 / s**2)
    out.support_radius = float(
        max(np.linalg.norm(c) + SUPPORT_DECAY_RADII * s for c, s in zip(centers, scales))
    )
    return out


def log_wavelet(n: int, spacing: float, scale: float = 1.0) -> Volume:
    """Laplacian-of-Gaussian field ``-laplace exp(-pi |x|^2 / scale^2)``.

    Mean-free and radial, with transform ``4 pi^2 |w|^2 scale^3
    exp(-pi scale^2 |w|^2)``; the standard zero-mean wavelet used by the
    synthesis-based inversion.
    """
    out = Volume(np.zeros((n, n, n)), spacing)
    g = np.pi / scale**2
    r2 = np.sum(out.coordinate_grid() ** 2, axis=-1)
    out.data = (6.0 * g - 4.0 * g * g * r2) * np.exp(-g * r2)
    out.support_radius = (SUPPORT_DECAY_RADII + 0.5) * scale
    return out


def resample(v: Volume, points: np.ndarray) -> np.ndarray:
    """Trilinear samples of a volume at (..., 3) physical points, zero outside."""
    pts = np.asarray(points, dtype=float)
    idx = (pts.reshape(-1, 3) - v.origin) / v.spacing
    vals = ndimage.map_coordinates(v.data, idx.T, order=1, mode="constant", cval=0.0)
    return vals.reshape(pts.shape[:-1])


def apply_pi(g: GroupElement, v: Volume) -> Volume:
    """Unitary point-space action ``a^(-3/2) f(a^-1 R^-1 (x - b))`` by resampling."""
    ginv = inverse(g)
    grid = v.coordinate_grid()
    query = ginv.b + ginv.a * (grid @ ginv.R.T)
    data = g.a**-1.5 * resample(v, query)
    radius = None
    if v.support_radius is not None:
        radius = g.a * v.support_radius + float(np.linalg.norm(g.b))
    return Volume(data, v.spacing, v.origin.copy(), support_radius=radius)
