"""Flux-dependent tunnelling of the rotor: spectra, rates, and dynamics.

Cyclic permutation of the three identical ions identifies orientations that
differ by 2 pi/3, so rotor wavefunctions live on a circle of period 2 pi/3
spanned by plane waves ``exp(3 i n theta)``.  A magnetic flux Phi through the
rotation loop enters as the gauge coupling ``alpha = 3 Phi/phi0`` (three
charges, each sweeping one sixth of the loop per well hop, so a pi/3 hop
accrues the phase ``pi Phi/phi0``), giving

    H = (hbar^2 / 2 I) (-i d/dtheta - alpha)^2 + U(theta).

The two wells per period make the low-energy physics a two-site ring whose
clockwise and anticlockwise hopping amplitudes carry opposite flux phases;
their interference modulates the doublet splitting as |cos(pi Phi/phi0)| with
period of exactly one flux quantum.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as const

from .crystal import tunnelling_trap
from .errors import ConvergenceError
from .rotor import RotorPotential, rotor_potential

FLUX_QUANTUM = const.h / const.e  # Wb

# eigenvector weight allowed on the outermost basis states
BASIS_TAIL_TOL = 1e-8


@dataclass(frozen=True)
class TunnellingSolution:
    """Low-lying spectrum of the flux-threaded rotor.

    flux_quanta : Phi/phi0 of this solve
    levels : lowest K energies in J, measured from the potential minimum
    splitting : E1 - E0 in J
    nu : observed tunnelling oscillation frequency splitting/h, Hz
    J_amp : tight-binding hop magnitude in Hz; half the zero-flux splitting/h
    basis_size : number of plane waves used
    """

    flux_quanta: float
    levels: np.ndarray
    splitting: float
    nu: float
    J_amp: float
    basis_size: int

    def to_json(self, indent=None):
        import json

        return json.dumps(
            {
                "schema_version": 1,
                "flux_quanta": self.flux_quanta,
                "levels_j": self.levels.tolist(),
                "levels_over_h_hz": (self.levels / const.h).tolist(),
                "splitting_j": self.splitting,
                "nu_hz": self.nu,
                "J_amp_hz": self.J_amp,
                "basis_size": self.basis_size,
            },
            indent=indent,
        )


@dataclass(frozen=True)
class DynamicsModel:
    """Parameters of the two-component population dynamics.

    p0 : ground-band population; tunnels coherently
    nu : tunnelling oscillation frequency at zero flux, Hz
    T2 : coherence time of the tunnelling oscillation, s
    v : classical rotation rate of the excited band, 1/s
    """

    p0: float
    nu: float
    T2: float
    v: float

    def __post_init__(self):
        if not 0.0 <= self.p0 <= 1.0:
            raise ValueError("p0 must be in [0, 1]")
        if self.nu < 0.0 or self.v < 0.0:
            raise ValueError("nu and v must be nonnegative")
        if self.T2 <= 0.0:
            raise ValueError("T2 must be positive")

    @classmethod
    def reference(cls):
        """Reference parameter set used by the demos and synthetic datasets."""
        return cls(p0=0.10, nu=7.6, T2=0.30, v=5.4)


def _potential_fourier(rot: RotorPotential):
    """Fourier coefficients of U over one rotor period [0, 2 pi/3).

    Returns ``u[k]`` with ``U(theta) = sum_k u[k] exp(3 i k theta)``; the
    coefficients are real (U is even) and vanish for odd k (period pi/3).
    """
    n_total = len(rot.theta_grid)
    if n_total % 3 != 0:
        raise ValueError("theta grid must tile [0, 2 pi) in thirds")
    seg = np.asarray(rot.U[: n_total // 3], dtype=float)
    coeff = np.fft.fft(seg) / len(seg)
    # U is real and even about theta = 0; drop the noise-level sine part and
    # enforce u_k == u_{-k} exactly (FFT rounding breaks it at ~1e-16)
    u = np.real(coeff)
    return 0.5 * (u + np.roll(u[::-1], 1))


def _hamiltonian(rot: RotorPotential, alpha, basis_size):
    u = _potential_fourier(rot)
    nseg = len(u)
    m = basis_size // 2
    if basis_size > nseg:
        raise ValueError("basis larger than available Fourier modes; raise n_theta")
    n_idx = np.arange(-m, m + 1)
    kin = (const.hbar**2 / (2.0 * rot.inertia)) * (3.0 * n_idx - alpha) ** 2
    h = u[(n_idx[:, None] - n_idx[None, :]) % nseg]
    h = h + np.diag(kin)
    return 0.5 * (h + h.T)


def band_levels(rot: RotorPotential, flux_quanta=0.0, basis_size=65, n_levels=8):
    """Diagonalize the flux-threaded rotor Hamiltonian.

    Parameters
    ----------
    rot : RotorPotential (its theta grid must cover [0, 2 pi))
    flux_quanta : Phi/phi0 threading the rotor loop
    basis_size : odd number of plane waves, >= 33
    n_levels : how many energies to keep

    Raises
    ------
    ConvergenceError : the lowest states put more than ``BASIS_TAIL_TOL``
        weight on the outermost plane waves; use a larger basis.
    """
    if basis_size < 33 or basis_size % 2 == 0:
        raise ValueError("basis_size must be odd and at least 33")
    # the spectrum is exactly periodic in one flux quantum (gauge shift of the
    # plane-wave ladder) and even in the flux sign (time reversal); solving in
    # the folded domain [0, 1/2] makes both identities hold to the last bit
    folded = math.fmod(float(flux_quanta), 1.0)
    if folded < 0.0:
        folded += 1.0
    if folded > 0.5:
        folded = 1.0 - folded
    h = _hamiltonian(rot, 3.0 * folded, basis_size)
    w, v = np.linalg.eigh(h)
    tail = np.sum(v[[0, -1], :n_levels] ** 2, axis=0)
    if np.max(tail) > BASIS_TAIL_TOL:
        raise ConvergenceError(
            f"plane-wave basis not converged: edge weight {np.max(tail):.2e} "
            f"> {BASIS_TAIL_TOL:.0e}; increase basis_size"
        )
    splitting = float(w[1] - w[0])
    if folded == 0.0:
        j_amp = 0.5 * splitting / const.h
    else:
        h0 = _hamiltonian(rot, 0.0, basis_size)
        w0 = np.linalg.eigvalsh(h0)
        j_amp = 0.5 * float(w0[1] - w0[0]) / const.h
    return TunnellingSolution(
        flux_quanta=float(flux_quanta),
        levels=w[:n_levels].copy(),
        splitting=splitting,
        nu=splitting / const.h,
        J_amp=j_amp,
        basis_size=basis_size,
    )


def tunnelling_rate_vs_flux(rot: RotorPotential, flux_quanta_list, basis_size=65):
    """Exact-diagonalization nu(Phi) over a list of Phi/phi0 values.

    Returns an (n, 2) array of (flux quanta, nu in Hz).
    """
    out = np.empty((len(flux_quanta_list), 2))
    for i, fq in enumerate(flux_quanta_list):
        sol = band_levels(rot, flux_quanta=fq, basis_size=basis_size)
        out[i] = (fq, sol.nu)
    return out


def rate_table_to_csv(table, axis_name):
    """CSV for an (n, 2) rate table; `axis_name` labels the first column.

    Use ``flux_quanta`` for :func:`tunnelling_rate_vs_flux` output and
    ``delta_hz`` for :func:`rate_vs_confinement` output (converted to Hz).
    """
    lines = [f"# {axis_name},nu_hz"]
    for x, nu in table:
        if axis_name == "delta_hz":
            x = x / (2 * np.pi)
        lines.append(f"{x:.9e},{nu:.9e}")
    return "\n".join(lines) + "\n"


def probability_curve_to_csv(tau, probability):
    """CSV of a transition-probability curve over waiting time."""
    lines = ["# tau_s,probability"]
    lines += [f"{t:.9e},{p:.9e}" for t, p in zip(tau, probability)]
    return "\n".join(lines) + "\n"


def population_dynamics(tau, p0, nu, t2, v):
    """Probability that the rotor orientation has flipped after time tau.

    Two additive channels: the ground band oscillates coherently at `nu` with
    a Gaussian coherence envelope, and the thermally excited band randomizes
    classically at rate `v`:

        P = p0 (1 - exp(-(tau/t2)^2) cos(2 pi nu tau))/2
            + (1 - p0)(1 - exp(-v tau))/2
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    coherent = (1.0 - np.exp(-((tau / t2) ** 2)) * np.cos(2 * np.pi * nu * tau)) / 2.0
    classical = (1.0 - np.exp(-v * tau)) / 2.0
    out = p0 * coherent + (1.0 - p0) * classical
    return float(out) if out.ndim == 0 else out


def flux_modulated_rate(flux_quanta, nu0):
    """Tight-binding tunnelling frequency nu0 |cos(pi Phi/phi0)| in Hz."""
    return nu0 * np.abs(np.cos(np.pi * np.asarray(flux_quanta, dtype=float)))


def golden_rule_envelope(flux_quanta):
    """Short-time transition envelope |cos(pi Phi/phi0)|^2.

    Equals ``(1 + cos(2 pi Phi/phi0))/2``: the two-path interference factor
    that modulates the transition probability per unit time.  The full
    time-dependent :func:`transition_probability` is the primary model; this
    is its fixed-time simplification.
    """
    return (1.0 + np.cos(2 * np.pi * np.asarray(flux_quanta, dtype=float))) / 2.0


def transition_probability(flux_quanta, tau, model: DynamicsModel):
    """Orientation-flip probability after `tau` seconds at a given flux.

    The coherent channel oscillates at the flux-modulated rate
    ``nu(Phi) = nu0 |cos(pi Phi/phi0)|``; the classical channel is flux-blind.
    At fixed flux this is the time-scan fit model; versus flux at fixed tau it
    traces the interference fringe whose envelope follows
    ``(1 + cos(2 pi Phi/phi0))/2``.
    """
    nu = flux_modulated_rate(flux_quanta, model.nu)
    return population_dynamics(tau, model.p0, nu, model.T2, model.v)


def coherence_from_confinement_noise(slope, delta_confinement_rms):
    """Tunnelling-frequency jitter and dephasing time from confinement noise.

    Parameters
    ----------
    slope : |d nu / d(omega_x - omega_z)| in Hz per Hz of confinement offset
    delta_confinement_rms : rms confinement fluctuation, Hz

    Returns
    -------
    (delta_nu, T2_estimate) : Hz and seconds; ``T2 = 1/(pi delta_nu)``, the
    first-order-equivalent Gaussian-envelope convention.  Zero jitter returns
    an infinite T2.
    """
    if slope < 0 or delta_confinement_rms < 0:
        raise ValueError("slope and rms must be nonnegative")
    delta_nu = abs(slope) * delta_confinement_rms
    if delta_nu == 0.0:
        return 0.0, math.inf
    return delta_nu, 1.0 / (math.pi * delta_nu)


def _rate_point(args):
    trap, delta, n_theta, basis_size = args
    rot = rotor_potential(trap, n_theta=n_theta)
    sol = band_levels(rot, flux_quanta=0.0, basis_size=basis_size)
    return delta, sol.nu


def rate_vs_confinement(deltas, trap_template=None, n_theta=256, basis_size=65,
                        jobs=1, progress=None):
    """Zero-flux tunnelling rate against the radial confinement offset.

    Runs the full crystal -> rotor -> diagonalization pipeline per offset.
    `deltas` are ``omega_x - omega_z`` values in rad/s applied to the
    template trap (default: the standard tunnelling trap template); points
    run in `jobs` worker processes when > 1.  Returns an (n, 2) array of
    (delta in rad/s, nu in Hz) ordered by delta.
    """
    from dataclasses import replace

    deltas = sorted(float(d) for d in deltas)
    tasks = []
    for delta in deltas:
        if trap_template is None:
            trap = tunnelling_trap(delta=delta)
        else:
            trap = replace(trap_template, omega_x=trap_template.omega_z + delta)
        tasks.append((trap, delta, n_theta, basis_size))

    if jobs > 1:
        import concurrent.futures as cf

        with cf.ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_rate_point, tasks))
    else:
        results = []
        for i, task in enumerate(tasks):
            results.append(_rate_point(task))
            if progress is not None:
                progress(i + 1, len(tasks))
    return np.array(sorted(results))
