"""Magnetic-field geometry, flux bookkeeping, and Lorentz-force estimators.

Two orthogonal coil sets produce the field at the rotor: a fixed field along
{1/2, -1/2, 1/sqrt(2)} and a tunable one along {1/2, -1/2, -1/sqrt(2)}.  The
flux through the rotation loop is the loop area times the field component
along the loop normal, counted in units of the flux quantum h/e.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as const

FLUX_QUANTUM = const.h / const.e  # Wb
GAUSS = 1e-4  # T

FIXED_COIL_DIRECTION = np.array([0.5, -0.5, 1.0 / math.sqrt(2.0)])
TUNABLE_COIL_DIRECTION = np.array([0.5, -0.5, -1.0 / math.sqrt(2.0)])
DEFAULT_LOOP_AREA = 37e-12  # m^2, pi r0^2 of the rotor path


@dataclass(frozen=True)
class FieldSetup:
    """Fields at the rotor, the loop normal, and the loop area (SI units)."""

    fixed_field: np.ndarray
    tunable_field: np.ndarray
    rotor_normal: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 1.0, 0.0])
    )
    loop_area: float = DEFAULT_LOOP_AREA

    def __post_init__(self):
        object.__setattr__(self, "fixed_field", np.asarray(self.fixed_field, float))
        object.__setattr__(self, "tunable_field", np.asarray(self.tunable_field, float))
        object.__setattr__(self, "rotor_normal", np.asarray(self.rotor_normal, float))
        for name in ("fixed_field", "tunable_field", "rotor_normal"):
            if getattr(self, name).shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
        if abs(np.linalg.norm(self.rotor_normal) - 1.0) > 1e-12:
            raise ValueError("rotor_normal must be a unit vector")
        if self.loop_area <= 0:
            raise ValueError("loop_area must be positive")

    @classmethod
    def default(cls, fixed_gauss=3.4, tunable_gauss=0.0, loop_area=DEFAULT_LOOP_AREA,
                misalignment_rad=0.0):
        """Coil geometry of the experiment; fields given in gauss.

        `misalignment_rad` tilts the loop normal away from {0, 1, 0} toward
        the fixed-coil axis, modelling an angular error between the coils and
        the crystal plane; zero by default.
        """
        normal = np.array([0.0, 1.0, 0.0])
        if misalignment_rad != 0.0:
            axis = FIXED_COIL_DIRECTION - (FIXED_COIL_DIRECTION @ normal) * normal
            axis /= np.linalg.norm(axis)
            normal = (
                math.cos(misalignment_rad) * normal
                + math.sin(misalignment_rad) * axis
            )
        return cls(
            fixed_field=fixed_gauss * GAUSS * FIXED_COIL_DIRECTION,
            tunable_field=tunable_gauss * GAUSS * TUNABLE_COIL_DIRECTION,
            rotor_normal=normal,
            loop_area=loop_area,
        )

    def with_tunable_gauss(self, tunable_gauss):
        """Same setup with the tunable coil set to `tunable_gauss` gauss."""
        return replace(
            self, tunable_field=tunable_gauss * GAUSS * TUNABLE_COIL_DIRECTION
        )

    def to_json(self, indent=None):
        return json.dumps(
            {
                "schema_version": 1,
                "fixed_field_t": self.fixed_field.tolist(),
                "tunable_field_t": self.tunable_field.tolist(),
                "rotor_normal": self.rotor_normal.tolist(),
                "loop_area_m2": self.loop_area,
            },
            indent=indent,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(
            fixed_field=np.asarray(data["fixed_field_t"], float),
            tunable_field=np.asarray(data["tunable_field_t"], float),
            rotor_normal=np.asarray(data["rotor_normal"], float),
            loop_area=float(data["loop_area_m2"]),
        )


def flux(setup: FieldSetup):
    """Magnetic flux through the rotor loop.

    Returns ``(Phi, Phi/phi0)`` in (Wb, dimensionless), signed by the
    orientation of the total field against the loop normal.
    """
    b_perp = float((setup.fixed_field + setup.tunable_field) @ setup.rotor_normal)
    phi = setup.loop_area * b_perp
    return phi, phi / FLUX_QUANTUM


@dataclass(frozen=True)
class LorentzEstimates:
    """Order-of-magnitude Lorentz forces on the tunnelling rotor."""

    v_max: float  # m/s, from the under-barrier kinetic-energy deficit
    F_max: float  # N
    v_mean: float  # m/s, from the hop rate times the arc length
    F_mean: float  # N
    radius_shift: float  # m, F_max against the radial Coulomb stiffness

    def to_json(self, indent=None):
        return json.dumps(
            {
                "schema_version": 1,
                "v_max_m_per_s": self.v_max,
                "F_max_n": self.F_max,
                "v_mean_m_per_s": self.v_mean,
                "F_mean_n": self.F_mean,
                "radius_shift_m": self.radius_shift,
            },
            indent=indent,
        )


def lorentz_estimates(barrier_energy, ground_energy, rotor_mass, b_field,
                      hop_rate, r0):
    """Estimate the Lorentz forces acting during tunnelling.

    Parameters
    ----------
    barrier_energy, ground_energy : J (top of the barrier, rotor ground level)
    rotor_mass : total mass of the rotor, kg
    b_field : magnetic field magnitude, T
    hop_rate : tunnelling rate, Hz
    r0 : rotation radius, m

    The maximal speed treats |U0 - E| as kinetic energy,
    ``v_max = sqrt(2 |U0 - E| / M)``; the mean speed is one well-to-well arc
    per hop, ``v_mean = J r0 pi / 3``.  Forces are ``e v B``.  The quoted
    radius shift divides the maximal force by the radial Coulomb stiffness
    ``e^2/(4 pi eps0 r0^3)`` of the potential valley that defines the loop.
    """
    if min(rotor_mass, r0) <= 0 or b_field < 0 or hop_rate < 0:
        raise ValueError("mass and radius must be positive; B and J nonnegative")
    if barrier_energy == ground_energy:
        raise ValueError("barrier and ground energies must differ")
    v_max = math.sqrt(2.0 * abs(barrier_energy - ground_energy) / rotor_mass)
    v_mean = hop_rate * r0 * math.pi / 3.0
    f_max = const.e * v_max * b_field
    f_mean = const.e * v_mean * b_field
    k_radial = const.e**2 / (4 * math.pi * const.epsilon_0 * r0**3)
    return LorentzEstimates(
        v_max=v_max,
        F_max=f_max,
        v_mean=v_mean,
        F_mean=f_mean,
        radius_shift=f_max / k_radial,
    )
