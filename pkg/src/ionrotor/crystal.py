"""Equilibrium structures of small ion crystals in an anisotropic harmonic trap.

The trap is the static pseudopotential of a linear Paul trap, characterised by
three secular frequencies.  All internal arithmetic is dimensionless: lengths
in units of ``l = (q^2 / (4 pi eps0 m wz^2))^(1/3)`` and energies in units of
``m wz^2 l^2``, which makes the Coulomb prefactor exactly one.  SI values are
converted at the API boundary.
"""

import io
import json
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as const

from .errors import ConvergenceError, SingularConfigurationError
from .numerics import damped_newton

# dimensionless gradient-norm convergence target of the minimizer
GRADIENT_TOL = 1e-12
# relative tolerance of the pairwise-distance fingerprint used to merge minima
FINGERPRINT_RTOL = 1e-6
# eigenvalues of the dimensionless Hessian below -(ZERO_MODE_TOL)^2 mark a saddle
ZERO_MODE_TOL = 1e-6


@dataclass(frozen=True)
class TrapConfig:
    """Secular trap frequencies (rad/s) and ion properties (SI).

    ``omega_x`` and ``omega_z`` span the plane of the crystal; ``omega_y`` is
    the tightly confined out-of-plane direction.
    """

    omega_x: float
    omega_y: float
    omega_z: float
    ion_mass: float
    ion_charge: float = const.e
    n_ions: int = 3

    def __post_init__(self):
        if min(self.omega_x, self.omega_y, self.omega_z) <= 0.0:
            raise ValueError("trap frequencies must be strictly positive")
        if self.ion_mass <= 0.0 or self.ion_charge <= 0.0:
            raise ValueError("ion mass and charge must be strictly positive")
        if self.n_ions < 1:
            raise ValueError("n_ions must be a positive integer")

    @classmethod
    def default(cls):
        """Experimental operating point: 2pi x {1.523, 1.961, 1.119} MHz, three 40Ca+ ions."""
        return cls(
            omega_x=2 * np.pi * 1.523e6,
            omega_y=2 * np.pi * 1.961e6,
            omega_z=2 * np.pi * 1.119e6,
            ion_mass=40 * const.atomic_mass,
        )

    @property
    def coulomb_coeff(self):
        """q^2 / (4 pi eps0) in J m."""
        return self.ion_charge**2 / (4 * np.pi * const.epsilon_0)

    @property
    def length_scale(self):
        """Characteristic length l = (q^2 / (4 pi eps0 m wz^2))^(1/3) in metres."""
        return (self.coulomb_coeff / (self.ion_mass * self.omega_z**2)) ** (1.0 / 3.0)

    @property
    def energy_scale(self):
        """Characteristic energy m wz^2 l^2 in joules."""
        return self.ion_mass * self.omega_z**2 * self.length_scale**2

    @property
    def anisotropies(self):
        """((wx/wz)^2, (wy/wz)^2): the only parameters of the dimensionless problem."""
        return (self.omega_x / self.omega_z) ** 2, (self.omega_y / self.omega_z) ** 2


def tunnelling_trap(delta=2 * np.pi * 1.75e3, omega_y=None):
    """Default trap tuned near the orientational critical point.

    `delta` is ``omega_x - omega_z`` in rad/s; the documented tunnelling
    operating point keeps the axial and out-of-plane frequencies of
    :meth:`TrapConfig.default` and softens only the radial confinement.
    The default offset of 2*pi*1.75 kHz puts the orientational well
    frequency at 2*pi*0.18 kHz.
    """
    base = TrapConfig.default()
    return replace(
        base,
        omega_x=base.omega_z + delta,
        omega_y=base.omega_y if omega_y is None else omega_y,
    )


@dataclass(frozen=True)
class IonCrystal:
    """A stationary configuration of the trap-plus-Coulomb potential.

    positions : (N, 3) array, metres
    energy : total potential energy, joules
    gradient_norm : norm of the SI energy gradient at `positions`, J/m
    converged : True when the minimizer met its gradient tolerance
    soft_rotation : True for the isotropic in-plane trap (wx == wz), where the
        returned orientation is one representative of a continuous family
    """

    positions: np.ndarray
    energy: float
    trap: TrapConfig
    converged: bool
    gradient_norm: float
    soft_rotation: bool = False

    def to_json(self, indent=None):
        payload = {
            "schema_version": 1,
            "positions_m": np.asarray(self.positions).tolist(),
            "energy_j": self.energy,
            "gradient_norm_j_per_m": self.gradient_norm,
            "converged": bool(self.converged),
            "soft_rotation": bool(self.soft_rotation),
        }
        return json.dumps(payload, indent=indent)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# ion,x_m,y_m,z_m\n")
        for i, row in enumerate(np.asarray(self.positions)):
            buf.write(f"{i},{row[0]:.12e},{row[1]:.12e},{row[2]:.12e}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# dimensionless energy model (lengths in l, energies in m wz^2 l^2)

def _pair_distances(u):
    diff = u[:, None, :] - u[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=2))
    return diff, dist


def _check_separation(dist, tol=1e-12):
    n = dist.shape[0]
    if n < 2:
        return
    off = dist[np.triu_indices(n, k=1)]
    if np.min(off) < tol:
        raise SingularConfigurationError(
            f"coincident ions: minimum separation {np.min(off):.3e} length units"
        )


def _energy_dimless(u, ax, ay):
    harm = 0.5 * np.sum(ax * u[:, 0] ** 2 + ay * u[:, 1] ** 2 + u[:, 2] ** 2)
    if u.shape[0] < 2:
        return harm
    _, dist = _pair_distances(u)
    _check_separation(dist)
    iu = np.triu_indices(u.shape[0], k=1)
    return harm + np.sum(1.0 / dist[iu])


def _gradient_dimless(u, ax, ay):
    g = u * np.array([ax, ay, 1.0])
    if u.shape[0] < 2:
        return g
    diff, dist = _pair_distances(u)
    _check_separation(dist)
    np.fill_diagonal(dist, 1.0)
    inv3 = 1.0 / dist**3
    np.fill_diagonal(inv3, 0.0)
    g -= np.sum(diff * inv3[:, :, None], axis=1)
    return g


def _hessian_dimless(u, ax, ay):
    n = u.shape[0]
    h = np.zeros((n, 3, n, 3))
    trap_block = np.diag([ax, ay, 1.0])
    for i in range(n):
        h[i, :, i, :] += trap_block
    if n > 1:
        diff, dist = _pair_distances(u)
        _check_separation(dist)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                d = dist[i, j]
                nij = diff[i, j] / d
                block = (3.0 * np.outer(nij, nij) - np.eye(3)) / d**3
                h[i, :, j, :] -= block
                h[i, :, i, :] += block
    return h.reshape(3 * n, 3 * n)


# ---------------------------------------------------------------------------
# public energy surface

def potential_energy(positions, trap):
    """Total potential energy (J) of ions at `positions` (N x 3, metres).

    Sum of the per-ion harmonic pseudopotential and the pairwise Coulomb
    repulsion.  Raises :class:`SingularConfigurationError` for coincident ions.
    """
    u = _as_configuration(positions, trap) / trap.length_scale
    ax, ay = trap.anisotropies
    return float(_energy_dimless(u, ax, ay)) * trap.energy_scale


def potential_gradient(positions, trap):
    """Gradient of :func:`potential_energy` in J/m, shaped like `positions`."""
    u = _as_configuration(positions, trap) / trap.length_scale
    ax, ay = trap.anisotropies
    scale = trap.energy_scale / trap.length_scale
    return _gradient_dimless(u, ax, ay) * scale


def _as_configuration(positions, trap):
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 1:
        pos = pos.reshape(-1, 3)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError("positions must have shape (N, 3)")
    if pos.shape[0] != trap.n_ions:
        raise ValueError(
            f"expected {trap.n_ions} ions, got positions for {pos.shape[0]}"
        )
    return pos


# ---------------------------------------------------------------------------
# minimization

def _minimize_dimless(u0, ax, ay, gtol, max_iter=300):
    shape = u0.shape

    def fun(x):
        return _energy_dimless(x.reshape(shape), ax, ay)

    def grad(x):
        return _gradient_dimless(x.reshape(shape), ax, ay).ravel()

    def hess(x):
        return _hessian_dimless(x.reshape(shape), ax, ay)

    x, f, gnorm, _ = damped_newton(fun, grad, hess, u0.ravel(), gtol=gtol,
                                   max_iter=max_iter)
    return x.reshape(shape), f, gnorm


def _descend_to_minimum(u0, ax, ay, gtol):
    """Newton descent followed by saddle escapes along unstable directions."""
    u, f, gnorm = _minimize_dimless(u0, ax, ay, gtol)
    for _ in range(4):
        h = _hessian_dimless(u, ax, ay)
        w, v = np.linalg.eigh(h)
        if w[0] >= -(ZERO_MODE_TOL**2):
            return u, f, gnorm
        kick = 1e-3 * v[:, 0].reshape(u.shape)
        cands = []
        for sign in (+1.0, -1.0):
            try:
                cands.append(_minimize_dimless(u + sign * kick, ax, ay, gtol))
            except (ConvergenceError, SingularConfigurationError):
                continue
        if not cands:
            break
        u, f, gnorm = min(cands, key=lambda c: c[1])
    raise ConvergenceError(
        f"descent terminated on a saddle point (gradient norm {gnorm:.3e})"
    )


def _triangle_seed(radius, theta, n=3):
    ang = theta + 2 * np.pi * np.arange(n) / n
    seed = np.zeros((n, 3))
    seed[:, 0] = radius * np.cos(ang)
    seed[:, 2] = radius * np.sin(ang)
    return seed


def _default_seeds(trap):
    """Deterministic multi-start set covering chain and planar candidates."""
    n = trap.n_ions
    seeds = []
    if n == 3:
        a = (5.0 / 4.0) ** (1.0 / 3.0)
        chain = np.zeros((3, 3))
        chain[:, 2] = (-a, 0.0, a)
        seeds.append(chain)
        bent = chain.copy()
        bent[1, 0] = 0.05  # break collinearity toward a triangle
        seeds.append(bent)
        bent2 = chain.copy()
        bent2[1, 0] = -0.05
        seeds.append(bent2)
        r = 3.0 ** (-1.0 / 6.0)
        for theta in (0.0, np.pi / 6, np.pi / 3, np.pi / 2):
            seeds.append(_triangle_seed(r, theta))
    else:
        # generic: axial lattice plus a fixed transverse zigzag perturbation
        z = np.linspace(-(n - 1) / 2.0, (n - 1) / 2.0, n)
        chain = np.zeros((n, 3))
        chain[:, 2] = z
        seeds.append(chain)
        zig = chain.copy()
        zig[:, 0] = 0.05 * (-1.0) ** np.arange(n)
        seeds.append(zig)
    return seeds


def find_equilibrium(trap, seed=None, gtol=GRADIENT_TOL):
    """Locate a local minimum of the trap-plus-Coulomb potential.

    With an explicit `seed` ((N, 3), metres) the Newton descent returns the
    minimum nearest that configuration.  Without one, a deterministic set of
    chain and triangle seeds is relaxed and the lowest-energy stable minimum
    is returned.

    Raises :class:`ConvergenceError` with the last gradient norm when the
    minimizer stalls.
    """
    ax, ay = trap.anisotropies
    if seed is not None:
        seeds = [_as_configuration(seed, trap) / trap.length_scale]
    else:
        seeds = _default_seeds(trap)
    best = None
    last_error = None
    for s in seeds:
        try:
            u, f, gnorm = _descend_to_minimum(s, ax, ay, gtol)
        except (ConvergenceError, SingularConfigurationError) as err:
            last_error = err
            continue
        if best is None or f < best[1] - 1e-14 * (1.0 + abs(best[1])):
            best = (u, f, gnorm)
    if best is None:
        raise ConvergenceError(f"no seed converged to a stable minimum: {last_error}")
    u, f, gnorm = best
    return IonCrystal(
        positions=u * trap.length_scale,
        energy=f * trap.energy_scale,
        trap=trap,
        converged=True,
        gradient_norm=gnorm * trap.energy_scale / trap.length_scale,
        soft_rotation=_is_soft_rotation(trap, u),
    )


def _is_soft_rotation(trap, u):
    if abs(trap.omega_x - trap.omega_z) > 1e-9 * trap.omega_z:
        return False
    return not _is_collinear(u)


def _is_collinear(u, tol=1e-6):
    c = u - u.mean(axis=0)
    svals = np.linalg.svd(c, compute_uv=False)
    return svals[1] < tol * max(svals[0], 1e-30)


def orientation_parameter(positions):
    """Complex orientation order parameter of a planar (x-z) configuration.

    ``sum(rho_i^3 exp(3 i phi_i)) / sum(rho_i^3)`` with centroid-frame polar
    coordinates in the x-z plane.  Its phase advances by three times any rigid
    rotation about y, so the two degenerate orientation classes of a triangle
    map to opposite values; collinear chains give zero.
    """
    pos = np.asarray(positions, dtype=float)
    c = pos - pos.mean(axis=0)
    rho = np.hypot(c[:, 0], c[:, 2])
    phi = np.arctan2(c[:, 2], c[:, 0])
    w = np.sum(rho**3 * np.exp(3j * phi))
    norm = np.sum(rho**3)
    return w / norm if norm > 0 else 0.0 + 0.0j


def _fingerprint(u):
    n = u.shape[0]
    _, dist = _pair_distances(u)
    return np.sort(dist[np.triu_indices(n, k=1)])


def _same_minimum(crys_a, crys_b, merge_orientation):
    ua = crys_a.positions
    ub = crys_b.positions
    fa, fb = _fingerprint(ua), _fingerprint(ub)
    scale = max(np.max(fa), np.max(fb))
    if np.max(np.abs(fa - fb)) > FINGERPRINT_RTOL * scale:
        return False
    if merge_orientation:
        return True
    wa = orientation_parameter(ua)
    wb = orientation_parameter(ub)
    return abs(wa - wb) <= 1e-3 * max(abs(wa), abs(wb), 1e-30) or (
        abs(wa) < 1e-9 and abs(wb) < 1e-9
    )


def enumerate_minima(trap, gtol=GRADIENT_TOL):
    """All distinct stable minima of the trap, modulo ion permutation.

    Configurations are deduplicated by their sorted pairwise-distance
    fingerprint; mirror-degenerate orientations (which share a fingerprint)
    are separated by the complex orientation parameter.  For the isotropic
    in-plane trap the continuous family of rotated triangles collapses to a
    single representative flagged ``soft_rotation``.

    Returned crystals are sorted by energy, then by descending real part of
    the orientation parameter ('up' class first).
    """
    ax, ay = trap.anisotropies
    soft = abs(trap.omega_x - trap.omega_z) <= 1e-9 * trap.omega_z
    found = []
    for s in _default_seeds(trap):
        try:
            u, f, gnorm = _descend_to_minimum(s, ax, ay, gtol)
        except (ConvergenceError, SingularConfigurationError):
            continue
        crys = IonCrystal(
            positions=u * trap.length_scale,
            energy=f * trap.energy_scale,
            trap=trap,
            converged=True,
            gradient_norm=gnorm * trap.energy_scale / trap.length_scale,
            soft_rotation=_is_soft_rotation(trap, u),
        )
        if not any(_same_minimum(crys, other, merge_orientation=soft) for other in found):
            found.append(crys)
    found.sort(
        key=lambda c: (
            round(c.energy / trap.energy_scale, 9),  # degenerate pairs tie here
            -np.real(orientation_parameter(c.positions)),
        )
    )
    return found
