"""Effective one-dimensional orientation potential of the planar triangle.

For each orientation angle the remaining coordinates relax to their
constrained minimum, which defines the periodic potential governing the
crystal's rigid rotation about the out-of-plane axis.  The orientation
coordinate is the mean polar angle of the ions in the crystal plane: fixing
the sum of the three angles leaves an unconstrained problem over the chart

    (rho_0, rho_1, rho_2, phi_0, phi_1, y_0, y_1, y_2),

with the third angle eliminated by the constraint.  Under a rigid rotation the
coordinate advances by the rotation angle, and the trap's two in-plane mirror
symmetries reflect it about the well centre and about the barrier top, so the
potential is exactly pi/3-periodic with degenerate wells at 0 and pi/3 (the
two orientation classes).  Only one period is computed; the rest is
replicated.
"""

import io
import json
from dataclasses import dataclass

import numpy as np
from scipy import constants as const

from . import crystal as _crystal
from .crystal import IonCrystal, find_equilibrium
from .errors import ConvergenceError
from .numerics import damped_newton

PERIOD = np.pi / 3.0


@dataclass(frozen=True)
class RotorPotential:
    """Sampled orientation potential of the rotor.

    theta_grid : angles in rad over [0, 2 pi), measured from the 'up' well
    U : energies in J with the global minimum subtracted
    r0 : effective rotation radius sqrt(I / (N m)), metres
    inertia : moment of inertia about the out-of-plane axis, kg m^2
    barrier : max(U) - min(U), J
    period : pi/3 (six-fold symmetry)
    """

    theta_grid: np.ndarray
    U: np.ndarray
    r0: float
    inertia: float
    barrier: float
    period: float = PERIOD

    def well_curvature(self):
        """d^2 U / d theta^2 at the well bottom (J/rad^2), from the Fourier series.

        The grid is periodic with the well on a grid point, so spectral
        differentiation beats local finite differences on these tiny energy
        scales.
        """
        n = len(self.theta_grid)
        coeff = np.fft.rfft(self.U) / n
        k = np.arange(len(coeff))
        # U(theta) = c0 + sum_k 2 Re(c_k) cos(k theta) for even U
        return float(-2.0 * np.sum(k[1:] ** 2 * np.real(coeff[1:])))

    def well_frequency(self):
        """Small-oscillation angular frequency sqrt(U''(0)/I) in rad/s."""
        return float(np.sqrt(max(self.well_curvature(), 0.0) / self.inertia))

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# theta_rad,U_over_h_hz\n")
        for th, u in zip(self.theta_grid, self.U):
            buf.write(f"{th:.12e},{u / const.h:.12e}\n")
        return buf.getvalue()

    def to_json(self, indent=None):
        payload = {
            "schema_version": 1,
            "theta_rad": self.theta_grid.tolist(),
            "U_over_h_hz": (self.U / const.h).tolist(),
            "r0_m": self.r0,
            "inertia_kg_m2": self.inertia,
            "barrier_j": self.barrier,
            "barrier_over_h_hz": self.barrier / const.h,
            "period_rad": self.period,
        }
        return json.dumps(payload, indent=indent)


def moment_of_inertia(crys: IonCrystal):
    """Moment of inertia about the out-of-plane (y) axis through the centroid.

    Returns ``(inertia, r0)`` with ``I = sum(m rho_i^2)`` over in-plane
    centroid distances and ``r0 = sqrt(I / (N m))``.
    """
    pos = np.asarray(crys.positions, dtype=float)
    c = pos - pos.mean(axis=0)
    rho2 = c[:, 0] ** 2 + c[:, 2] ** 2
    inertia = float(crys.trap.ion_mass * np.sum(rho2))
    r0 = float(np.sqrt(inertia / (pos.shape[0] * crys.trap.ion_mass)))
    return inertia, r0


# ---------------------------------------------------------------------------
# chart between reduced parameters and ion coordinates (dimensionless lengths)

def _plane_vec(angle):
    return np.array([np.cos(angle), 0.0, np.sin(angle)])


def _params_to_config(p, phi_sum):
    rho = p[0:3]
    phi = np.array([p[3], p[4], phi_sum - p[3] - p[4]])
    u = rho[:, None] * np.stack([np.cos(phi), np.zeros(3), np.sin(phi)], axis=1)
    u[:, 1] = p[5:8]
    return u


def _chart_jacobian(p, phi_sum):
    """d(configuration)/d(params), shape (9, 8)."""
    rho = p[0:3]
    phi = np.array([p[3], p[4], phi_sum - p[3] - p[4]])
    jac = np.zeros((3, 3, 8))
    for i in range(3):
        jac[i, :, i] = _plane_vec(phi[i])
    dvec = [np.array([-np.sin(a), 0.0, np.cos(a)]) for a in phi]
    # phi_0 and phi_1 are free; phi_2 moves oppositely through the constraint
    jac[0, :, 3] = rho[0] * dvec[0]
    jac[2, :, 3] = -rho[2] * dvec[2]
    jac[1, :, 4] = rho[1] * dvec[1]
    jac[2, :, 4] = -rho[2] * dvec[2]
    for i in range(3):
        jac[i, 1, 5 + i] = 1.0
    return jac.reshape(9, 8)


def _config_to_params(u, phi_ref):
    """Chart parameters of a configuration; angles taken nearest `phi_ref`."""
    rho = np.hypot(u[:, 0], u[:, 2])
    phi = np.arctan2(u[:, 2], u[:, 0])
    phi += np.round((phi_ref - phi) / (2 * np.pi)) * 2 * np.pi
    return np.concatenate([rho, phi[:2], u[:, 1]]), float(np.sum(phi))


def _relax_at_angle(phi_sum, p0, ax, ay, gtol=1e-12):
    """Constrained minimum energy at a fixed mean orientation angle."""

    def fun(p):
        return _crystal._energy_dimless(_params_to_config(p, phi_sum), ax, ay)

    def grad(p):
        u = _params_to_config(p, phi_sum)
        g = _crystal._gradient_dimless(u, ax, ay).ravel()
        return _chart_jacobian(p, phi_sum).T @ g

    def hess(p):
        # forward differences of the analytic gradient; plenty accurate for
        # Newton steps while final accuracy rests on the gradient itself
        h = np.empty((8, 8))
        step = 1e-6
        g0 = grad(p)
        for j in range(8):
            dp = p.copy()
            dp[j] += step
            h[:, j] = (grad(dp) - g0) / step
        return 0.5 * (h + h.T)

    p, f, _, _ = damped_newton(fun, grad, hess, p0, gtol=gtol, max_iter=120)
    return p, f


def rotor_potential(trap, n_theta=256, gtol=1e-12):
    """Constrained-minimum energy versus crystal orientation.

    Parameters
    ----------
    trap : TrapConfig in the planar-triangle regime
    n_theta : samples per pi/3 period, >= 64; the returned grid covers
        [0, 2 pi) with 6 * n_theta points

    Each sample seeds the relaxation with the equilibrium crystal rigidly
    rotated to the target angle, making the samples independent and the
    result deterministic.

    Raises
    ------
    ValueError : trap not in the two-dimensional (triangle) regime
    ConvergenceError : a constrained relaxation failed (message carries theta)
    """
    if n_theta < 64:
        raise ValueError("n_theta must be at least 64 samples per period")
    eq = find_equilibrium(trap)
    scale = trap.length_scale
    u_eq = eq.positions / scale
    c = u_eq - u_eq.mean(axis=0)
    rho = np.hypot(c[:, 0], c[:, 2])
    if np.min(rho) < 0.2 * np.max(rho):
        raise ValueError(
            "trap is not in the planar-triangle regime (found a chain-like minimum)"
        )
    ax, ay = trap.anisotropies

    inertia, r0 = moment_of_inertia(eq)
    energy_unit = trap.energy_scale
    phi_eq = np.arctan2(u_eq[:, 2], u_eq[:, 0])
    phi_sum_eq = float(np.sum(phi_eq))

    thetas = np.linspace(0.0, PERIOD, n_theta, endpoint=False)
    energies = np.empty(n_theta)
    for k, th in enumerate(thetas):
        rot = _rotate_y(u_eq, th)
        p0, _ = _config_to_params(rot, phi_eq + th)
        try:
            _, f = _relax_at_angle(phi_sum_eq + 3.0 * th, p0, ax, ay, gtol=gtol)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"constrained relaxation failed at theta={th:.6f} rad: {err}"
            ) from err
        energies[k] = f

    u_full = np.tile(energies, 6) * energy_unit
    u_full -= u_full.min()
    theta_full = np.concatenate([thetas + m * PERIOD for m in range(6)])
    return RotorPotential(
        theta_grid=theta_full,
        U=u_full,
        r0=r0,
        inertia=inertia,
        barrier=float(u_full.max()),
    )


def _rotate_y(u, angle):
    ca, sa = np.cos(angle), np.sin(angle)
    out = u.copy()
    out[:, 0] = ca * u[:, 0] - sa * u[:, 2]
    out[:, 2] = sa * u[:, 0] + ca * u[:, 2]
    return out
