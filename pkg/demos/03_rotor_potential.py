"""The six-fold orientation potential at the tunnelling operating point.

Relaxes the crystal at fixed orientation over one period, then shows the
periodic potential with its two well classes, the barrier, and the rotor's
quantum levels.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from scipy import constants as const

from ionrotor import band_levels, rotor_potential, tunnelling_trap

out = pathlib.Path(__file__).parent / "output"
out.mkdir(exist_ok=True)

trap = tunnelling_trap()  # omega_x - omega_z = 2 pi x 1.75 kHz
pot = rotor_potential(trap, n_theta=256)
(out / "rotor_potential.csv").write_text(pot.to_csv())

print(f"rotation radius r0 = {pot.r0 * 1e6:.3f} um")
print(f"moment of inertia  = {pot.inertia:.3e} kg m^2")
print(f"barrier height     = h x {pot.barrier / const.h:.1f} Hz")
print(f"well frequency     = 2 pi x {pot.well_frequency() / (2 * np.pi):.1f} Hz")

sol = band_levels(pot)
print(f"ground level       = h x {sol.levels[0] / const.h:.1f} Hz")
print(f"doublet splitting  = h x {sol.splitting / const.h:.2f} Hz "
      f"-> tunnelling at {sol.nu:.2f} Hz")

fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(pot.theta_grid, pot.U / const.h, lw=1.2)
for level in sol.levels[:2]:
    ax.axhline(level / const.h, color="tab:red", lw=0.7, alpha=0.7)
ax.set_xlabel("orientation angle (rad)")
ax.set_ylabel("U / h (Hz)")
ax.set_xlim(0, 2 * np.pi)
fig.tight_layout()
fig.savefig(out / "rotor_potential.png", dpi=150)
print(f"wrote {out / 'rotor_potential.csv'} and rotor_potential.png")
