"""Inversion routes: filtered backprojection, Fourier regridding, wavelet frames.

Three independent paths recover a volume from its plane or line sinogram:

* ``invert_fbp_plane``: apply the squared unitarization filter per direction,
  then backproject over the half-sphere chart.  In the continuum this
  reproduces the volume with constant exactly 1: the chart's half-sphere of
  directions times the full signed offset axis tiles frequency space once.

* ``invert_direct_fourier``: the per-direction offset spectra are samples of
  the volume's 3-D spectrum (projection-slice); read them back at each
  Cartesian frequency through the chart sampler and invert.  Coverage of the
  requested band is a hard precondition, not a warning.

* ``invert_wavelet``: synthesis over a discrete similitude lattice.  The
  analysis template is the filtered forward transform of the wavelet (doubled
  unitarization power), each coefficient is reweighted by the inverse of the
  scale character, and the Calderon constant divided by 4 pi normalizes the
  sum.  Coefficients against all translates of one (rotation, scale) node are
  a per-direction correlation, so they are evaluated with one FFT per
  direction grid instead of one sinogram resampling per lattice node.

The label-space representation ``apply_pi_hat`` lives here too; it is the
conjugated action the transforms intertwine with, and the slow-but-direct
route to the same wavelet coefficients (used to cross-check the FFT path).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientCoverage, LatticeTooCoarse
from .filters import MultiplierSpec, admissibility_constant, apply_multiplier
from .grid import Spectrum3D, Volume, apply_pi, idft3, l2_norm
from .group import CharacterSet, GroupElement, icosahedral_rotations
from .xform import (
    LineSinogram,
    PlaneSinogram,
    backproject_plane,
    radon_plane,
    sample_line_images,
    sample_line_sinogram,
    sample_plane_profiles,
    sample_plane_sinogram,
    xray,
)

# Fraction of in-band frequency voxels that may go unhit before direct
# Fourier inversion refuses to proceed.
COVERAGE_TOL = 0.01

# A trilinear splat weight below this is treated as an unhit voxel.
SPLAT_WEIGHT_FLOOR = 1e-12

# Zero-padding factors for the per-direction spectra read by the direct
# Fourier gather.  Off-center content makes the spectra oscillate (about 0.7
# rad per unpadded frequency cell for a unit-offset feature), and linear
# interpolation between samples that far apart in phase biases magnitudes by
# several percent; padding refines the frequency step until the residual is
# dominated by the direction grid instead.  The line factor is smaller only
# because the padded 2-D spectra grow quadratically in memory.
PLANE_SPECTRAL_PAD = 4.0
LINE_SPECTRAL_PAD = 2.0

# Zero-padding for the wavelet-coefficient correlations.  The FFT correlation
# is circular; without padding, templates translated near the lattice edge
# wrap around the offset axis and pick up spurious overlap with the data.
# Padding extends the period past the combined supports.
PLANE_CORRELATION_PAD = 2.0
LINE_CORRELATION_PAD = 1.5

# Energy-vs-reconstruction mismatch beyond this factor triggers the
# coarse-lattice warning in the wavelet synthesis.
LATTICE_ENERGY_SLACK = 0.5

# Lattice shifts within this many voxels of an exact grid offset are applied
# by array slicing instead of resampling.
SHIFT_SNAP_TOL = 1e-9


# ---------------------------------------------------------------------------
# Label-space representation
# ---------------------------------------------------------------------------


def apply_pi_hat_plane(g: GroupElement, s: PlaneSinogram) -> PlaneSinogram:
    """Unitary action of a group element on a plane sinogram.

    Output at label ``(n, t)`` is ``a ** -1/2`` times the input at the
    transformed label ``(R^-1 n, (t - n . b) / a)``; grid values are pulled
    back through the chart-aware sampler.
    """
    geom = s.geometry
    dirs = geom.normals @ g.R  # rows: R^-1 n
    offs = (geom.ts[None, None, :] - (geom.normals @ g.b)[:, :, None]) / g.a
    vals = sample_plane_sinogram(s, dirs[:, :, None, :], offs)
    return PlaneSinogram(vals / np.sqrt(g.a), geom)


def apply_pi_hat_line(g: GroupElement, s: LineSinogram) -> LineSinogram:
    """Unitary action of a group element on a line sinogram.

    Output at label ``(n, w)`` is ``a ** -1`` times the input at direction
    ``R^-1 n`` and offset ``R^-1 (w - b) / a``; the sampler projects the
    offset vector onto each stored node's own detector frame, so no explicit
    perpendicular projection is needed here.
    """
    geom = s.geometry
    dirs = (geom.normals @ g.R)[:, :, None, None, :]
    e1 = geom.frames[:, :, :, 0]
    e2 = geom.frames[:, :, :, 1]
    w = (
        e1[:, :, None, None, :] * geom.us[None, None, :, None, None]
        + e2[:, :, None, None, :] * geom.vs[None, None, None, :, None]
    )
    moved = ((w - g.b) @ g.R) / g.a
    vals = sample_line_sinogram(s, dirs, moved)
    return LineSinogram(vals / g.a, geom)


def apply_pi_hat(
    g: GroupElement, s: PlaneSinogram | LineSinogram
) -> PlaneSinogram | LineSinogram:
    if isinstance(s, PlaneSinogram):
        return apply_pi_hat_plane(g, s)
    return apply_pi_hat_line(g, s)


# ---------------------------------------------------------------------------
# Filtered backprojection
# ---------------------------------------------------------------------------


def invert_fbp_plane(s: PlaneSinogram, n: int, spacing: float) -> Volume:
    """Reconstruct by backprojecting the doubly unitarized sinogram.

    The filter is the squared-power multiplier (symbol ``tau ** 2``); the
    half-sphere direction integral of the filtered data then equals the
    inverse Fourier integral of the volume, with constant exactly 1.
    """
    filtered = apply_multiplier(s, MultiplierSpec(2.0))
    return backproject_plane(filtered, n, spacing)


# ---------------------------------------------------------------------------
# Direct Fourier regridding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourierCoverage:
    """Diagnostics from direct Fourier regridding."""

    band_limit: float
    covered_fraction: float
    n_samples: int


def _default_band_limit(dtheta: float, dphi: float, freq_spacing: float) -> float:
    # Adjacent frequency rays separate by about |w| * max(dtheta, dphi); the
    # trilinear splat bridges gaps up to ~2 frequency cells.
    return 2.0 * freq_spacing / max(dtheta, dphi)


def _splat_coverage(
    wsum: np.ndarray, freqs: np.ndarray, freq_spacing: float, n: int
) -> None:
    """Trilinear scatter of sample weights onto the flattened n^3 grid."""
    pos = freqs.reshape(-1, 3) / freq_spacing + n // 2
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    size = n * n * n
    for corner in range(8):
        off = np.array([(corner >> 2) & 1, (corner >> 1) & 1, corner & 1])
        idx = base + off
        w = np.prod(np.where(off == 1, frac, 1.0 - frac), axis=1)
        ok = np.all((idx >= 0) & (idx < n), axis=1)
        flat = (idx[ok, 0] * n + idx[ok, 1]) * n + idx[ok, 2]
        wsum += np.bincount(flat, weights=w[ok], minlength=size)


def _padded_t_spectra(s: PlaneSinogram, pad: float) -> tuple[np.ndarray, float, float]:
    """Per-direction offset spectra on a pad-times finer frequency axis.

    Returns (spectra, frequency step, offset of the padded grid's first node).
    """
    g = s.geometry
    n_pad = int(round(pad * g.n_t))
    data = np.zeros((g.n_theta, g.n_phi, n_pad))
    lo = (n_pad - g.n_t) // 2
    data[:, :, lo : lo + g.n_t] = s.data
    t0 = g.ts[0] - lo * g.dt
    dtau = 1.0 / (n_pad * g.dt)
    k = np.arange(n_pad) - n_pad // 2
    spec = np.fft.fftshift(np.fft.fft(data, axis=-1), axes=-1)
    return spec * g.dt * np.exp(-2j * np.pi * dtau * k * t0), dtau, t0


def _padded_uv_spectra(
    s: LineSinogram, pad: float
) -> tuple[np.ndarray, float, float, float, float]:
    """Per-direction detector spectra on pad-times finer frequency axes.

    Returns (spectra, both frequency steps, both padded-grid origins).
    """
    g = s.geometry
    nu_pad = int(round(pad * g.n_u))
    nv_pad = int(round(pad * g.n_v))
    lou = (nu_pad - g.n_u) // 2
    lov = (nv_pad - g.n_v) // 2
    dnu = 1.0 / (nu_pad * g.du)
    dnv = 1.0 / (nv_pad * g.dv)
    ku = np.arange(nu_pad) - nu_pad // 2
    kv = np.arange(nv_pad) - nv_pad // 2
    u0 = g.us[0] - lou * g.du
    v0 = g.vs[0] - lov * g.dv
    phase = (
        np.exp(-2j * np.pi * dnu * ku * u0)[:, None]
        * np.exp(-2j * np.pi * dnv * kv * v0)
        * (g.du * g.dv)
    )
    spec = np.zeros((g.n_theta, g.n_phi, nu_pad, nv_pad), dtype=complex)
    buf = np.zeros((g.n_phi, nu_pad, nv_pad))
    for i in range(g.n_theta):
        buf[:] = 0.0
        buf[:, lou : lou + g.n_u, lov : lov + g.n_v] = s.data[i]
        spec[i] = np.fft.fftshift(np.fft.fft2(buf, axes=(-2, -1)), axes=(-2, -1)) * phase
    return spec, dnu, dnv, u0, v0


def invert_direct_fourier(
    s: PlaneSinogram | LineSinogram,
    n: int,
    spacing: float,
    band_limit: float | None = None,
) -> tuple[Volume, FourierCoverage]:
    """Reconstruct by reading per-direction spectra back onto a Cartesian grid.

    Values are gathered through the chart sampler from zero-padded spectra
    (see the padding constants above); a separate scatter pass records which
    frequency voxels actually receive samples, and more than ``COVERAGE_TOL``
    unhit voxels inside the band raises :class:`InsufficientCoverage`.
    Frequencies outside the band are zeroed, so the reconstruction is
    band-limited.
    """
    freq_spacing = 1.0 / (n * spacing)
    geom = s.geometry
    if band_limit is None:
        band_limit = _default_band_limit(geom.dtheta, geom.dphi, freq_spacing)
    axis = (np.arange(n) - n // 2) * freq_spacing
    W = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    mag = np.linalg.norm(W, axis=-1)
    wsum = np.zeros(n * n * n)
    n_samples = 0
    if isinstance(s, PlaneSinogram):
        dtau0 = 1.0 / (geom.n_t * geom.dt)
        taus = (np.arange(geom.n_t) - geom.n_t // 2) * dtau0
        for i in range(geom.n_theta):
            freqs = geom.normals[i][:, None, :] * taus[None, :, None]
            _splat_coverage(wsum, freqs, freq_spacing, n)
            n_samples += geom.n_phi * geom.n_t
        spec, dtau, _ = _padded_t_spectra(s, PLANE_SPECTRAL_PAD)
        nz = mag > 0.0
        dirs = np.where(nz[:, None], W, [0.0, 0.0, 1.0])
        dirs = dirs / np.where(nz, mag, 1.0)[:, None]
        tau_lo = -(spec.shape[-1] // 2) * dtau
        vals = sample_plane_profiles(
            spec, geom.n_theta, geom.n_phi, dirs, mag, tau_lo, dtau
        )
    else:
        nu_u = (np.arange(geom.n_u) - geom.n_u // 2) / (geom.n_u * geom.du)
        nu_v = (np.arange(geom.n_v) - geom.n_v // 2) / (geom.n_v * geom.dv)
        for i in range(geom.n_theta):
            e1 = geom.frames[i, :, :, 0]
            e2 = geom.frames[i, :, :, 1]
            freqs = (
                e1[:, None, None, :] * nu_u[None, :, None, None]
                + e2[:, None, None, :] * nu_v[None, None, :, None]
            )
            _splat_coverage(wsum, freqs, freq_spacing, n)
            n_samples += geom.n_phi * geom.n_u * geom.n_v
        spec, dnu, dnv, _, _ = _padded_uv_spectra(s, LINE_SPECTRAL_PAD)
        # query each frequency from a perpendicular direction, crossing with
        # whichever coordinate axis it is least aligned with
        ref = np.where(
            np.abs(W[:, 2:3]) < 0.9 * np.maximum(mag[:, None], 1e-300),
            [[0.0, 0.0, 1.0]],
            [[1.0, 0.0, 0.0]],
        )
        q = np.cross(ref, W)
        qn = np.linalg.norm(q, axis=-1)
        ok = qn > 0.0
        q = np.where(ok[:, None], q, [0.0, 1.0, 0.0])
        q = q / np.where(ok, qn, 1.0)[:, None]
        vals = sample_line_images(
            spec, geom, q, W,
            -(spec.shape[-2] // 2) * dnu, dnu, -(spec.shape[-1] // 2) * dnv, dnv,
        )
    wsum = wsum.reshape(n, n, n)
    mag = mag.reshape(n, n, n)
    in_band = mag <= band_limit
    hit = wsum > SPLAT_WEIGHT_FLOOR
    covered = float(np.count_nonzero(in_band & hit)) / float(np.count_nonzero(in_band))
    if 1.0 - covered > COVERAGE_TOL:
        raise InsufficientCoverage(
            f"only {covered:.4f} of frequency voxels inside band {band_limit:.3f} "
            f"received samples (need >= {1.0 - COVERAGE_TOL:.2f}); "
            "increase the direction grid or lower the band limit"
        )
    grid = np.where(in_band, vals.reshape(n, n, n), 0.0)
    origin = -(n // 2) * spacing * np.ones(3)
    recon = idft3(Spectrum3D(grid, freq_spacing, spacing, origin))
    return recon, FourierCoverage(band_limit, covered, n_samples)


# ---------------------------------------------------------------------------
# Similitude lattice and wavelet synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupLattice:
    """Product discretization of the similitude group with left-Haar weights.

    Nodes are (shift, rotation, scale) triples; the weight of every node at
    scale ``a`` is ``a**-4 * shift_cell**3 * (1 / n_rotations) * a *
    log_scale_cell``, the left-invariant cell mass with the rotation factor
    carrying total mass 1.
    """

    shifts: np.ndarray  # (n_shifts, 3)
    rotations: np.ndarray  # (n_rotations, 3, 3)
    scales: np.ndarray  # (n_scales,)
    shift_cell: float
    log_scale_cell: float

    @classmethod
    def build(
        cls,
        shift_extent: float,
        n_shift: int,
        scale_min: float,
        scale_max: float,
        n_scale: int,
        rotations: list[np.ndarray] | None = None,
    ) -> "GroupLattice":
        if n_shift < 2 or n_scale < 2:
            raise ValueError("need at least 2 nodes per lattice axis")
        if not 0.0 < scale_min < scale_max:
            raise ValueError("need 0 < scale_min < scale_max")
        axis = np.linspace(-shift_extent, shift_extent, n_shift)
        shifts = np.stack(
            np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1
        ).reshape(-1, 3)
        if rotations is None:
            rotations = icosahedral_rotations()
        return cls(
            shifts=shifts,
            rotations=np.asarray(rotations, dtype=float),
            scales=np.geomspace(scale_min, scale_max, n_scale),
            shift_cell=axis[1] - axis[0],
            log_scale_cell=np.log(scale_max / scale_min) / (n_scale - 1),
        )

    @property
    def n_nodes(self) -> int:
        return len(self.scales) * len(self.rotations) * len(self.shifts)

    def scale_weights(self) -> np.ndarray:
        """Left-Haar cell mass shared by all nodes at each scale."""
        return (
            self.scales**-3.0
            * self.log_scale_cell
            * self.shift_cell**3
            / len(self.rotations)
        )

    def elements(self):
        """Yield ``(GroupElement, weight)`` in (scale, rotation, shift) order."""
        for a, w in zip(self.scales, self.scale_weights()):
            for R in self.rotations:
                for b in self.shifts:
                    yield GroupElement(b, R, float(a)), float(w)


@dataclass(frozen=True)
class WaveletMetrics:
    """Diagnostics from the frame synthesis.

    ``coefficient_energy`` is the normalized lattice sum of squared weighted
    coefficients; at convergence it equals the squared norm of the imaged
    volume, and its ratio to ``reconstruction_norm ** 2`` is the internal
    coarseness indicator.
    """

    coefficient_energy: float
    reconstruction_norm: float
    calderon: float
    n_nodes: int

    @property
    def energy_ratio(self) -> float:
        return self.coefficient_energy / self.reconstruction_norm**2


def _direction_index_grids(shape: tuple[int, ...], ndim: int):
    ii = np.arange(shape[0]).reshape((shape[0],) + (1,) * (ndim - 1))
    jj = np.arange(shape[1]).reshape((1, shape[1]) + (1,) * (ndim - 2))
    return ii, jj


def _interp_periodic_profiles(profiles: np.ndarray, pos: np.ndarray) -> np.ndarray:
    """Linear interp along the last axis with periodic wrap; pos in index units."""
    n = profiles.shape[-1]
    k0 = np.floor(pos).astype(np.int64)
    w = pos - k0
    ii, jj = _direction_index_grids(profiles.shape, pos.ndim)
    v0 = profiles[ii, jj, np.mod(k0, n)]
    v1 = profiles[ii, jj, np.mod(k0 + 1, n)]
    return v0 * (1.0 - w) + v1 * w


def _interp_periodic_images(
    images: np.ndarray, pu: np.ndarray, pv: np.ndarray
) -> np.ndarray:
    """Bilinear interp in the detector axes with periodic wrap."""
    n_u, n_v = images.shape[-2], images.shape[-1]
    iu = np.floor(pu).astype(np.int64)
    iv = np.floor(pv).astype(np.int64)
    wu, wv = pu - iu, pv - iv
    ii, jj = _direction_index_grids(images.shape, pu.ndim)
    acc = np.zeros(pu.shape, dtype=images.dtype)
    for su, sv, w in (
        (0, 0, (1 - wu) * (1 - wv)),
        (1, 0, wu * (1 - wv)),
        (0, 1, (1 - wu) * wv),
        (1, 1, wu * wv),
    ):
        acc = acc + w * images[ii, jj, np.mod(iu + su, n_u), np.mod(iv + sv, n_v)]
    return acc


def _plane_coefficients(
    s: PlaneSinogram, template: PlaneSinogram, lattice: GroupLattice
) -> np.ndarray:
    """Frame coefficients against all lattice nodes, shape (n_a, n_R, n_b).

    For fixed rotation and scale the coefficient is a correlation along the
    offset axis, so all shifts are read off one inverse FFT per direction:
    the per-direction product of the data spectrum with the conjugated,
    dilated template spectrum, evaluated at offset ``n . b``.
    """
    geom = s.geometry
    shat, dtau, t0 = _padded_t_spectra(s, PLANE_CORRELATION_PAD)
    psihat, _, _ = _padded_t_spectra(template, PLANE_CORRELATION_PAD)
    n_pad = shat.shape[-1]
    taus = (np.arange(n_pad) - n_pad // 2) * dtau
    phase0 = np.exp(2j * np.pi * taus * t0)
    m_dir = geom.direction_weights
    proj = geom.normals.reshape(-1, 3) @ lattice.shifts.T  # (n_dir, n_b)
    proj = proj.reshape(geom.n_theta, geom.n_phi, -1)
    pos = (proj - t0) / geom.dt
    out = np.empty((len(lattice.scales), len(lattice.rotations), len(lattice.shifts)))
    for ir, R in enumerate(lattice.rotations):
        dirs = (geom.normals @ R)[:, :, None, :]
        for ia, a in enumerate(lattice.scales):
            temp_spec = sample_plane_profiles(
                psihat, geom.n_theta, geom.n_phi, dirs, a * taus[None, None, :],
                taus[0], dtau,
            )
            prod = shat * np.conj(temp_spec) * phase0
            corr = np.fft.ifft(np.fft.ifftshift(prod, axes=-1), axis=-1) / geom.dt
            vals = _interp_periodic_profiles(corr.real, pos)
            out[ia, ir] = np.sqrt(a) * np.tensordot(m_dir, vals, axes=([0, 1], [0, 1]))
    return out


def _line_coefficients(
    s: LineSinogram, template: LineSinogram, lattice: GroupLattice
) -> np.ndarray:
    """Frame coefficients for line data; 2-D analog of the plane path."""
    geom = s.geometry
    shat, dnu, dnv, u0, v0 = _padded_uv_spectra(s, LINE_CORRELATION_PAD)
    psihat, _, _, _, _ = _padded_uv_spectra(template, LINE_CORRELATION_PAD)
    nu_pad, nv_pad = shat.shape[-2], shat.shape[-1]
    nu_u = (np.arange(nu_pad) - nu_pad // 2) * dnu
    nu_v = (np.arange(nv_pad) - nv_pad // 2) * dnv
    phase0 = np.exp(2j * np.pi * nu_u * u0)[:, None] * np.exp(2j * np.pi * nu_v * v0)
    # The line-space inner product carries a 1/pi direction factor (see
    # sinogram_inner); the coefficients must use the same measure or the
    # synthesis comes out a factor of pi too large.
    m_dir = geom.direction_weights / np.pi
    e1 = geom.frames[:, :, :, 0]
    e2 = geom.frames[:, :, :, 1]
    pu = (e1.reshape(-1, 3) @ lattice.shifts.T).reshape(geom.n_theta, geom.n_phi, -1)
    pv = (e2.reshape(-1, 3) @ lattice.shifts.T).reshape(geom.n_theta, geom.n_phi, -1)
    pos_u = (pu - u0) / geom.du
    pos_v = (pv - v0) / geom.dv
    out = np.empty((len(lattice.scales), len(lattice.rotations), len(lattice.shifts)))
    for ir, R in enumerate(lattice.rotations):
        dirs = (geom.normals @ R)[:, :, None, None, :]
        e1r = e1 @ R
        e2r = e2 @ R
        for ia, a in enumerate(lattice.scales):
            vecs = a * (
                e1r[:, :, None, None, :] * nu_u[None, None, :, None, None]
                + e2r[:, :, None, None, :] * nu_v[None, None, None, :, None]
            )
            temp_spec = sample_line_images(
                psihat, geom, dirs, vecs, nu_u[0], dnu, nu_v[0], dnv,
            )
            prod = shat * np.conj(temp_spec) * phase0
            corr = (
                np.fft.ifft2(np.fft.ifftshift(prod, axes=(-2, -1)), axes=(-2, -1))
                / (geom.du * geom.dv)
            )
            vals = _interp_periodic_images(corr.real, pos_u, pos_v)
            out[ia, ir] = a * np.tensordot(m_dir, vals, axes=([0, 1], [0, 1]))
    return out


def _shifted_add(dst: np.ndarray, src: np.ndarray, shift: np.ndarray, c: float) -> None:
    """dst[x] += c * src[x - shift] for an integer voxel shift, zero-filled."""
    n = dst.shape
    s_dst = []
    s_src = []
    for ax in range(3):
        k = int(shift[ax])
        s_dst.append(slice(max(k, 0), n[ax] + min(k, 0)))
        s_src.append(slice(max(-k, 0), n[ax] - max(k, 0)))
        if s_dst[-1].start >= s_dst[-1].stop:
            return
    dst[tuple(s_dst)] += c * src[tuple(s_src)]


def invert_wavelet(
    s: PlaneSinogram | LineSinogram, psi: Volume, lattice: GroupLattice
) -> tuple[Volume, WaveletMetrics]:
    """Reconstruct on the wavelet's grid by frame synthesis over the lattice.

    Coefficients pair the data with the group-translated analysis template
    (the forward transform of ``psi`` with doubled unitarization power); each
    is divided by the scale character once for synthesis and twice for the
    energy sum, and the whole synthesis is normalized by the wavelet's
    Calderon constant over 4 pi.  Emits :class:`LatticeTooCoarse` when the
    coefficient energy and the reconstruction norm disagree badly.
    """
    calderon = admissibility_constant(psi)
    norm_const = calderon / (4.0 * np.pi)
    if isinstance(s, PlaneSinogram):
        chars = CharacterSet.plane()
        template = apply_multiplier(radon_plane(psi, s.geometry), MultiplierSpec(2.0))
        coefs = _plane_coefficients(s, template, lattice)
    else:
        chars = CharacterSet.line()
        template = apply_multiplier(xray(psi, s.geometry), MultiplierSpec(1.0))
        coefs = _line_coefficients(s, template, lattice)
    chi = lattice.scales**chars.chi_exp
    w_scale = lattice.scale_weights()
    energy = float(
        np.sum(w_scale[:, None, None] * (coefs / chi[:, None, None]) ** 2)
        / norm_const
    )
    recon = Volume(np.zeros_like(psi.data), psi.spacing, psi.origin)
    for ia, a in enumerate(lattice.scales):
        factor = w_scale[ia] / (chi[ia] * norm_const)
        for ir, R in enumerate(lattice.rotations):
            atom = apply_pi(GroupElement(np.zeros(3), R, float(a)), psi)
            for ib, b in enumerate(lattice.shifts):
                c = factor * coefs[ia, ir, ib]
                if c == 0.0:
                    continue
                steps = b / psi.spacing
                snapped = np.rint(steps)
                if np.max(np.abs(steps - snapped)) <= SHIFT_SNAP_TOL:
                    _shifted_add(recon.data, atom.data, snapped.astype(int), c)
                else:
                    moved = apply_pi(GroupElement(b, R, float(a)), psi)
                    recon.data += c * moved.data
    metrics = WaveletMetrics(
        coefficient_energy=energy,
        reconstruction_norm=l2_norm(recon),
        calderon=calderon,
        n_nodes=lattice.n_nodes,
    )
    if abs(metrics.energy_ratio - 1.0) > LATTICE_ENERGY_SLACK:
        warnings.warn(
            f"lattice energy ratio {metrics.energy_ratio:.3f} is far from 1; "
            "the similitude lattice undersamples the data",
            LatticeTooCoarse,
        )
    return recon, metrics
