"""Flat binary file formats for volumes and sinograms.

Both formats are a fixed-size ASCII header (space-padded, newline-terminated)
followed by raw little-endian float64 samples, so files round-trip
bit-exactly and can be read from any language with two lines of code.

Volume (`.svol`):  64-byte header
    ``SIMRAD-VOL v1 N=<int> h=<float> origin=<f,f,f> dtype=f64``
followed by N^3 values with x varying fastest.

Sinogram (`.sgm`):  96-byte header
    ``SIMRAD-SGM v1 kind=plane ntheta=.. nphi=.. nt=.. tmax=..``   or
    ``SIMRAD-SGM v1 kind=line ntheta=.. nphi=.. nu=.. nv=.. umax=..``
followed by samples with the offset axis fastest (plane: t; line: v then u),
directions in C order.
"""

from __future__ import annotations

import numpy as np

from .grid import Volume
from .xform import LineGeometry, LineSinogram, PlaneGeometry, PlaneSinogram

VOL_HEADER_BYTES = 64
SGM_HEADER_BYTES = 96
VOL_MAGIC = "SIMRAD-VOL"
SGM_MAGIC = "SIMRAD-SGM"
FORMAT_VERSION = "v1"


def _pack_header(text: str, size: int) -> bytes:
    if len(text) + 1 > size:
        raise ValueError(f"header {text!r} does not fit in {size} bytes")
    return (text + " " * (size - 1 - len(text)) + "\n").encode("ascii")


def _parse_header(raw: bytes, magic: str) -> dict[str, str]:
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ValueError(f"not a {magic} file: binary header") from exc
    tokens = text.split()
    if len(tokens) < 2 or tokens[0] != magic:
        raise ValueError(f"not a {magic} file: header starts {text[:20]!r}")
    if tokens[1] != FORMAT_VERSION:
        raise ValueError(f"unsupported {magic} version {tokens[1]!r}")
    fields = {}
    for token in tokens[2:]:
        key, _, value = token.partition("=")
        if not value:
            raise ValueError(f"malformed header token {token!r}")
        fields[key] = value
    return fields


def write_volume(path: str, v: Volume) -> None:
    n = v.data.shape[0]
    o = v.origin
    text = (
        f"{VOL_MAGIC} {FORMAT_VERSION} N={n} h={v.spacing:.9g} "
        f"origin={o[0]:.9g},{o[1]:.9g},{o[2]:.9g} dtype=f64"
    )
    with open(path, "wb") as fh:
        fh.write(_pack_header(text, VOL_HEADER_BYTES))
        np.ascontiguousarray(v.data.transpose(2, 1, 0), dtype="<f8").tofile(fh)


def read_volume(path: str) -> Volume:
    with open(path, "rb") as fh:
        fields = _parse_header(fh.read(VOL_HEADER_BYTES), VOL_MAGIC)
        if fields.get("dtype") != "f64":
            raise ValueError(f"unsupported dtype {fields.get('dtype')!r}")
        n = int(fields["N"])
        spacing = float(fields["h"])
        origin_field = fields.get("origin")
        origin = (
            np.array([float(c) for c in origin_field.split(",")])
            if origin_field
            else None
        )
        raw = np.fromfile(fh, dtype="<f8", count=n**3)
    if raw.size != n**3:
        raise ValueError(f"truncated volume: expected {n**3} samples, found {raw.size}")
    return Volume(raw.reshape(n, n, n).transpose(2, 1, 0).copy(), spacing, origin)


def write_sinogram(path: str, s: PlaneSinogram | LineSinogram) -> None:
    g = s.geometry
    if isinstance(s, PlaneSinogram):
        text = (
            f"{SGM_MAGIC} {FORMAT_VERSION} kind=plane ntheta={g.n_theta} "
            f"nphi={g.n_phi} nt={g.n_t} tmax={g.t_max:.9g}"
        )
    else:
        text = (
            f"{SGM_MAGIC} {FORMAT_VERSION} kind=line ntheta={g.n_theta} "
            f"nphi={g.n_phi} nu={g.n_u} nv={g.n_v} umax={g.u_max:.9g}"
        )
    with open(path, "wb") as fh:
        fh.write(_pack_header(text, SGM_HEADER_BYTES))
        np.ascontiguousarray(s.data, dtype="<f8").tofile(fh)


def read_sinogram(path: str) -> PlaneSinogram | LineSinogram:
    with open(path, "rb") as fh:
        fields = _parse_header(fh.read(SGM_HEADER_BYTES), SGM_MAGIC)
        kind = fields.get("kind")
        if kind == "plane":
            geometry = PlaneGeometry(
                int(fields["ntheta"]),
                int(fields["nphi"]),
                int(fields["nt"]),
                float(fields["tmax"]),
            )
            shape = (geometry.n_theta, geometry.n_phi, geometry.n_t)
        elif kind == "line":
            geometry = LineGeometry(
                int(fields["ntheta"]),
                int(fields["nphi"]),
                int(fields["nu"]),
                int(fields["nv"]),
                float(fields["umax"]),
            )
            shape = (geometry.n_theta, geometry.n_phi, geometry.n_u, geometry.n_v)
        else:
            raise ValueError(f"unknown sinogram kind {kind!r}")
        count = int(np.prod(shape))
        raw = np.fromfile(fh, dtype="<f8", count=count)
    if raw.size != count:
        raise ValueError(f"truncated sinogram: expected {count} samples, found {raw.size}")
    data = raw.reshape(shape)
    if kind == "plane":
        return PlaneSinogram(data, geometry)
    return LineSinogram(data, geometry)
