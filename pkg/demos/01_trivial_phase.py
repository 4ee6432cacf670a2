"""Half flux: the two spin chains coincide and the middle gap closes twice.

At beta = 1/2 the modulation lam*cos(pi*n +/- phi) equals (-1)^n lam*cos(phi)
for both signs, so the spins are the same chain.  On a ring the half-filling
gap closes linearly where cos(phi) vanishes.
"""

import numpy as np

from harper_z2 import LatticeParams, build_harper_chain, find_dirac_points, sweep_phi

ring = LatticeParams(N=80, beta="1/2", lam=15.0, boundary="periodic")
phis = np.linspace(0, 2 * np.pi, 801)

gap = max(np.max(np.abs(build_harper_chain(ring.with_(phi=p))
                        - build_harper_chain(ring.with_(phi=p, spin="down")))) for p in phis[::50])
print(f"largest up/down matrix difference: {gap:.1e}")

bands = sweep_phi(ring, phis)
for phi, energy in find_dirac_points(bands, filling=40):
    print(f"gap closes at phi = {phi / np.pi:.3f} pi, E = {energy:+.2e}")

# away from the closing points the half-filling gap is set by |lam cos(phi)|
lo, hi = bands.energies[:, 39], bands.energies[:, 40]
i = np.argmin(np.abs(phis - np.pi))
print(f"gap at phi = pi: {hi[i] - lo[i]:.3f}")
