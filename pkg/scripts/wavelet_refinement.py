#!/usr/bin/env python3
"""Wavelet-synthesis refinement study.

Reconstructs a dilated Gaussian from its plane-integral data by lattice frame
synthesis at three nested lattice resolutions and prints, per level, the
relative reconstruction error and the energy-identity ratio (coefficient
energy over the squared volume norm).  The acceptance suite pins the same
ladder; this script exists to look at the numbers directly.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from simrad.grid import gaussian_phantom, l2_norm, log_wavelet
from simrad.invert import GroupLattice, invert_wavelet
from simrad.xform import PlaneGeometry, radon_plane

# (shift extent, shifts per axis, scale min, scale max, scale count): each
# level widens the shift window, tightens the shift spacing, and extends the
# scale span, so the lattice sums at level k+1 dominate those at level k.
LADDER = (
    (0.9, 4, 0.8, 4.8, 4),
    (1.5, 6, 0.8, 5.6, 6),
    (2.1, 8, 0.8, 6.4, 8),
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=32, help="volume grid size")
    parser.add_argument("--h", type=float, default=0.3, help="voxel spacing")
    parser.add_argument("--scale", type=float, default=1.25, help="phantom width")
    args = parser.parse_args()

    vol = gaussian_phantom(args.n, args.h, scale=args.scale)
    sino = radon_plane(vol, PlaneGeometry(32, 32, 129, 6.0))
    psi = log_wavelet(args.n, args.h, 1.0)
    vol_energy = l2_norm(vol) ** 2

    print(f"phantom: Gaussian scale={args.scale} on {args.n}^3, h={args.h}")
    print(f"{'level':>5} {'nodes':>7} {'rel_l2_err':>10} {'energy_id':>9} {'secs':>6}")
    for level, (extent, n_shift, a_lo, a_hi, n_scale) in enumerate(LADDER):
        lattice = GroupLattice.build(extent, n_shift, a_lo, a_hi, n_scale)
        start = time.perf_counter()
        rec, metrics = invert_wavelet(sino, psi, lattice)
        elapsed = time.perf_counter() - start
        err = np.linalg.norm(rec.data - vol.data) / np.linalg.norm(vol.data)
        energy_id = metrics.coefficient_energy / vol_energy
        print(
            f"{level:>5} {metrics.n_nodes:>7} {err:>10.4f} "
            f"{energy_id:>9.4f} {elapsed:>6.1f}"
        )
    print(
        "the energy identity approaches 1 from below as the lattice grows; "
        "the error plateaus (truncated sums converge weakly, without a rate)"
    )


if __name__ == "__main__":
    main()
