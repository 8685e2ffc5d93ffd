"""Boson-statistics thermometry and adiabatic-ramp temperature modelling.

A harmonic mode in thermal equilibrium carries the occupation
``nbar = 1/(exp(hbar w / kB T) - 1)``; lowering the mode frequency slowly
enough conserves the occupation (entropy), so the temperature follows the
frequency.  Heating during a real ramp is represented phenomenologically as
occupation added linearly in time.
"""

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as const

ADIABATICITY_LIMIT = 0.1  # |(dw/dt)/w^2| above this is flagged


def nbar_from_temperature(omega, temperature):
    """Thermal occupation of a mode at `omega` (rad/s) and `temperature` (K)."""
    if omega <= 0 or temperature <= 0:
        raise ValueError("omega and temperature must be positive")
    x = const.hbar * omega / (const.k * temperature)
    if x > 700.0:  # expm1 overflows; occupation underflows to exp(-x)
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def temperature_from_nbar(omega, nbar):
    """Exact inverse of :func:`nbar_from_temperature`."""
    if omega <= 0 or nbar <= 0:
        raise ValueError("omega and nbar must be positive")
    return const.hbar * omega / (const.k * math.log1p(1.0 / nbar))


def ground_population(nbar):
    """Ground-state probability 1/(1 + nbar) of a thermal state."""
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    return 1.0 / (1.0 + nbar)


def ground_state_threshold(omega, p0_min):
    """Highest temperature keeping the thermal ground population >= p0_min."""
    if not 0.0 < p0_min < 1.0:
        raise ValueError("p0_min must be in (0, 1)")
    nbar_max = 1.0 / p0_min - 1.0
    return temperature_from_nbar(omega, nbar_max)


def nbar_from_sidebands(red_excitation, blue_excitation):
    """Occupation from the red/blue sideband asymmetry r/(1 - r), r = red/blue."""
    if not 0.0 <= red_excitation < blue_excitation <= 1.0:
        raise ValueError(
            "need 0 <= red < blue <= 1; a red sideband at or above the blue "
            "one is not a thermal state"
        )
    r = red_excitation / blue_excitation
    return r / (1.0 - r)


@dataclass(frozen=True)
class ThermalState:
    """A mode frequency with its thermal occupation, temperature and p0."""

    omega: float
    temperature: float
    nbar: float
    ground_population: float

    @classmethod
    def from_temperature(cls, omega, temperature):
        n = nbar_from_temperature(omega, temperature)
        return cls(omega, temperature, n, ground_population(n))

    @classmethod
    def from_nbar(cls, omega, nbar):
        return cls(omega, temperature_from_nbar(omega, nbar), nbar,
                   ground_population(nbar))


@dataclass(frozen=True)
class RampResult:
    """Time series of an adiabatic frequency ramp.

    adiabaticity is ``(dw/dt)/w^2`` by central differences; `flagged` marks
    instants violating ``|adiabaticity| <= 0.1``.
    """

    time: np.ndarray
    omega: np.ndarray
    nbar: np.ndarray
    temperature: np.ndarray
    adiabaticity: np.ndarray
    flagged: np.ndarray

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# t_s,omega_hz,nbar,temperature_k,adiabaticity\n")
        for row in zip(self.time, self.omega / (2 * np.pi), self.nbar,
                       self.temperature, self.adiabaticity):
            buf.write(",".join(f"{x:.9e}" for x in row) + "\n")
        return buf.getvalue()


def adiabatic_ramp(time, omega, temperature_start, heating_quanta=0.0):
    """Temperature evolution along a frequency schedule.

    Parameters
    ----------
    time, omega : equal-length samples of the schedule (s, rad/s)
    temperature_start : K, thermal state at time[0]
    heating_quanta : occupation added by the end of the ramp, accumulated
        linearly in time (phenomenological heating model)

    With zero heating the occupation is constant and T is proportional to
    omega; any instant where ``|(dw/dt)/w^2| > 0.1`` is flagged as
    non-adiabatic.
    """
    t = np.asarray(time, dtype=float)
    w = np.asarray(omega, dtype=float)
    if t.shape != w.shape or t.ndim != 1 or len(t) < 2:
        raise ValueError("time and omega must be equal-length 1-d samples")
    if np.any(w <= 0):
        raise ValueError("omega schedule must be strictly positive")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time samples must increase")

    nbar0 = nbar_from_temperature(w[0], temperature_start)
    frac = (t - t[0]) / (t[-1] - t[0])
    nbar = nbar0 + heating_quanta * frac
    temp = np.array([temperature_from_nbar(wi, ni) for wi, ni in zip(w, nbar)])
    with np.errstate(divide="ignore", invalid="ignore"):
        adiab = np.gradient(w, t) / w**2
    flagged = np.abs(adiab) > ADIABATICITY_LIMIT
    return RampResult(t, w, nbar, temp, adiab, flagged)


def exponential_schedule(omega_start, omega_end, duration, n=256):
    """Exponential-in-frequency ramp, the default schedule shape.

    Returns (time, omega) arrays over [0, duration].
    """
    if min(omega_start, omega_end) <= 0 or duration <= 0:
        raise ValueError("frequencies and duration must be positive")
    t = np.linspace(0.0, duration, n)
    w = omega_start * (omega_end / omega_start) ** (t / duration)
    return t, w
