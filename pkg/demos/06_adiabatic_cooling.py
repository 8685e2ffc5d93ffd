"""Adiabatic cooling of the rotational mode into the tunnelling regime.

Sideband cooling leaves the 750 kHz mode near its ground state; ramping the
confinement down to the 180 Hz rotor well divides the temperature by the
frequency ratio at constant occupation.  Heating during the ramp is modelled
as occupation added linearly in time.
"""

import numpy as np

from ionrotor import adiabatic_ramp, ground_state_threshold, nbar_from_sidebands
from ionrotor.thermo import exponential_schedule, temperature_from_nbar

w_cool = 2 * np.pi * 750e3
w_rotor = 2 * np.pi * 180.0

# sideband thermometry: red/blue asymmetry after cooling
nbar = nbar_from_sidebands(0.081, 1.0)
t_start = temperature_from_nbar(w_cool, nbar)
print(f"sideband asymmetry 0.081 -> nbar = {nbar:.3f}, "
      f"T = {t_start * 1e6:.1f} uK at 750 kHz")

# how cold must the rotor be for tunnelling to be visible?
t_needed = ground_state_threshold(w_rotor, 0.1)
print(f"ground population > 0.1 at 180 Hz needs T < {t_needed * 1e9:.0f} nK\n")

for heating, tag in ((0.0, "ideal ramp"), (4.0, "with 4 quanta of heating")):
    t, w = exponential_schedule(w_cool, w_rotor, duration=1.0)
    ramp = adiabatic_ramp(t, w, temperature_start=t_start, heating_quanta=heating)
    worst = np.max(np.abs(ramp.adiabaticity))
    print(f"{tag}:")
    print(f"  final nbar = {ramp.nbar[-1]:.3f}, "
          f"T = {ramp.temperature[-1] * 1e9:.2f} nK, "
          f"ground population = {1 / (1 + ramp.nbar[-1]):.2f}")
    print(f"  worst |(dw/dt)/w^2| = {worst:.3f} "
          f"({'adiabatic' if not ramp.flagged.any() else 'flagged'})")
