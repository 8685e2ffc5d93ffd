"""Crystal structures of three trapped ions across confinement regimes.

Walks the radial confinement from the chain regime down to the orientational
critical point, printing what the minimizer finds at each stage.
"""

from dataclasses import replace

import numpy as np

from ionrotor import TrapConfig, enumerate_minima, find_equilibrium
from ionrotor.crystal import orientation_parameter

trap = TrapConfig.default()
um = 1e-6

print("Trap: {wx, wy, wz} = 2 pi x {1.523, 1.961, 1.119} MHz, three Ca-40 ions")
print(f"Characteristic length scale: {trap.length_scale / um:.3f} um\n")

# --- strong confinement: a linear chain along z ------------------------------
chain = find_equilibrium(replace(trap, omega_x=2 * np.pi * 2.1e6))
print("omega_x = 2 pi x 2.1 MHz (strong confinement):")
for i, row in enumerate(chain.positions):
    print(f"  ion {i}: x = {row[0] / um:+.3f} um, z = {row[2] / um:+.3f} um")
print("  -> a linear chain; outer spacing is (5/4)^(1/3) of the length scale\n")

# --- intermediate confinement: two degenerate triangles ----------------------
print("omega_x = 2 pi x 1.523 MHz (intermediate confinement):")
for crys in enumerate_minima(trap):
    w = orientation_parameter(crys.positions)
    tag = "up" if np.real(w) > 0 else "down"
    print(f"  {tag:>4} triangle, energy {crys.energy:.6e} J")
print("  -> two stable orientations with identical energy; a projective")
print("     orientation measurement distinguishes them\n")

# --- near the critical point: the soft rotor ---------------------------------
iso = find_equilibrium(replace(trap, omega_x=trap.omega_z))
radius = np.hypot(*(iso.positions - iso.positions.mean(0))[:, [0, 2]].T).mean()
print("omega_x = omega_z = 2 pi x 1.119 MHz (critical point):")
print(f"  equilateral triangle, circumradius {radius / um:.3f} um")
print(f"  soft rotation flag: {iso.soft_rotation}")
print(f"  rotation loop area: {np.pi * radius**2 * 1e12:.1f} um^2")
