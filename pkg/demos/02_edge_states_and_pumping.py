"""Third flux: in-gap edge states and their adiabatic transport.

Spin up carries an edge state from the left end to the right end as phi
runs once around the circle; spin down does the mirror image.
"""

import numpy as np

from harper_z2 import LatticeParams, gap_state, track_pump

chain = LatticeParams(N=80, beta="1/3", lam=15.0)

for phi in (0.5, 1.0, 1.5):
    for spin in ("up", "down"):
        s = gap_state(chain.with_(phi=phi * np.pi, spin=spin), gap=1, edge_width=8)
        where = s.cls if s.in_gap else "no in-gap state"
        print(f"phi={phi:.1f}pi {spin:>4}: E={s.energy:+7.3f}  "
              f"left={s.w_left:.3f} right={s.w_right:.3f}  {where}")

path = np.linspace(0, 2 * np.pi, 401)
for spin in ("up", "down"):
    tr = track_pump(chain, path, gap=1, spin=spin)
    com = tr.center_of_mass
    print(f"{spin:>4} pump: {' -> '.join(tr.phases(1, -1))}; "
          f"<n> from {com[1]:.1f} to {com[-2]:.1f}")
