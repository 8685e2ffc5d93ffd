"""Monte Carlo synthesis of the measurement protocol and model fitting.

A run measures the initial orientation, cools, ramps into the tunnelling
regime, waits tau, ramps back, and measures again; repeating gives binomial
counts of orientation flips per scan point.  Time scans are fitted with the
damped-oscillation-plus-decay model of :func:`ionrotor.quantum.population_dynamics`
and flux scans with a plain cosine fringe.

Shots are drawn from ``numpy.random.Generator`` seeded with PCG64, so a fixed
seed reproduces counts bit-for-bit across runs and platforms.
"""

import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import abfield
from .quantum import DynamicsModel, population_dynamics, transition_probability

# flux quanta threading the loop with the tunable coils off; offsets the
# fringe phase of synthetic flux scans exactly as the fixed field does
DEFAULT_FLUX_OFFSET = abs(abfield.flux(abfield.FieldSetup.default())[1])


# sigma assigned to points with all or no successes (rule of three)
def _regularized_sigma(p, shots):
    sigma = np.sqrt(p * (1.0 - p) / shots)
    return np.where((p <= 0.0) | (p >= 1.0), 3.0 / shots, sigma)


@dataclass(frozen=True)
class ShotSeries:
    """Binomial measurement record over one scan axis.

    axis : tau values (s) for time scans or tunable flux quanta for flux scans
    shots_per_point : shots behind every point
    successes : orientation-flip counts
    probabilities : successes / shots
    errors : binomial standard deviations sqrt(p (1-p) / shots)
    """

    axis: np.ndarray
    shots_per_point: int
    successes: np.ndarray
    probabilities: np.ndarray = field(default=None)
    errors: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))
        object.__setattr__(self, "successes", np.asarray(self.successes))
        if np.any(self.successes < 0) or np.any(self.successes > self.shots_per_point):
            raise ValueError("successes must lie in [0, shots_per_point]")
        p = self.successes / float(self.shots_per_point)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(
            self, "errors", np.sqrt(p * (1.0 - p) / self.shots_per_point)
        )

    def to_csv(self):
        buf = io.StringIO()
        buf.write("# axis,successes,shots,probability,sigma\n")
        for a, s, p, e in zip(self.axis, self.successes, self.probabilities,
                              self.errors):
            buf.write(f"{a:.9e},{int(s)},{self.shots_per_point},{p:.9e},{e:.9e}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        axis, succ, shots = [], [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            axis.append(float(parts[0]))
            succ.append(int(parts[1]))
            shots.append(int(parts[2]))
        if len(set(shots)) != 1:
            raise ValueError("shots_per_point must be constant in a series")
        return cls(axis=np.array(axis), shots_per_point=shots[0],
                   successes=np.array(succ))


@dataclass(frozen=True)
class FitResult:
    """Parameters, uncertainties, and diagnostics of a least-squares fit."""

    names: tuple
    values: np.ndarray
    stderr: np.ndarray
    rss: float
    converged: bool
    covariance: np.ndarray

    def param(self, name):
        return float(self.values[self.names.index(name)])

    def error(self, name):
        return float(self.stderr[self.names.index(name)])

    def to_json(self, indent=None):
        return json.dumps(
            {
                "schema_version": 1,
                "parameters": {
                    n: {"value": float(v), "stderr": float(e)}
                    for n, v, e in zip(self.names, self.values, self.stderr)
                },
                "rss": self.rss,
                "converged": self.converged,
                "covariance": self.covariance.tolist(),
            },
            indent=indent,
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        names = tuple(data["parameters"].keys())
        values = np.array([data["parameters"][n]["value"] for n in names])
        stderr = np.array([data["parameters"][n]["stderr"] for n in names])
        return cls(
            names=names,
            values=values,
            stderr=stderr,
            rss=float(data["rss"]),
            converged=bool(data["converged"]),
            covariance=np.asarray(data["covariance"], dtype=float),
        )


# ---------------------------------------------------------------------------
# simulation

def simulate_time_scan(model: DynamicsModel, tau, shots=400, seed=0,
                       flux_quanta=0.0):
    """Binomial draws along a waiting-time scan at fixed flux."""
    tau = np.asarray(tau, dtype=float)
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = np.atleast_1d(transition_probability(flux_quanta, tau, model))
    rng = np.random.default_rng(seed)
    successes = rng.binomial(shots, p)
    return ShotSeries(axis=tau, shots_per_point=int(shots), successes=successes)


def simulate_flux_scan(model: DynamicsModel, flux_quanta, tau=0.05, shots=800,
                       seed=0, flux_offset_quanta=DEFAULT_FLUX_OFFSET):
    """Binomial draws along a tunable-flux scan at fixed waiting time.

    `flux_quanta` is the tunable-coil contribution; `flux_offset_quanta`
    (default: the fixed coil's share) is added before evaluating the physics,
    which is what puts a nonzero phase on the fitted fringe.
    """
    n = np.asarray(flux_quanta, dtype=float)
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = np.atleast_1d(transition_probability(n + flux_offset_quanta, tau, model))
    rng = np.random.default_rng(seed)
    successes = rng.binomial(shots, p)
    return ShotSeries(axis=n, shots_per_point=int(shots), successes=successes)


# ---------------------------------------------------------------------------
# weighted nonlinear least squares

def weighted_nlls(model_fn, p0, x, y, weights=None, names=None, max_iter=500,
                  rtol=1e-10, max_damping=1e12):
    """Damped Gauss-Newton (Levenberg-Marquardt) weighted least squares.

    Parameters
    ----------
    model_fn : callable(x, params) -> model values
    p0 : initial parameter vector
    x, y : data
    weights : per-point weights 1/sigma (uniform when omitted)
    names : parameter names for the FitResult

    The Jacobian comes from forward finite differences; steps solve the
    damped normal equations ``(J'J + lam diag(J'J)) d = J'r`` with `lam`
    adapted on acceptance/rejection, terminating when the residual
    sum of squares changes by less than `rtol` relatively (or `max_iter`
    iterations).  Deterministic for fixed inputs.  Failure to converge is
    reported through ``converged=False``, never by silent results.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    npar = p.size
    names = tuple(names) if names else tuple(f"p{i}" for i in range(npar))

    def residuals(params):
        return w * (y - model_fn(x, params))

    def jacobian(params, r0):
        jac = np.empty((len(y), npar))
        for j in range(npar):
            step = 1e-7 * max(abs(params[j]), 1e-7)
            pj = params.copy()
            pj[j] += step
            jac[:, j] = (residuals(pj) - r0) / step
        return jac

    r = residuals(p)
    rss = float(r @ r)
    lam = 1e-3
    converged = False
    jac = None
    for _ in range(max_iter):
        jac = jacobian(p, r)
        a = jac.T @ jac
        g = jac.T @ r
        accepted = False
        while lam <= max_damping:
            damped = a + lam * np.diag(np.maximum(np.diag(a), 1e-14))
            try:
                delta = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= 8.0
                continue
            p_try = p + delta
            r_try = residuals(p_try)
            rss_try = float(r_try @ r_try)
            if rss_try <= rss:
                improvement = rss - rss_try
                p, r, rss = p_try, r_try, rss_try
                lam = max(lam / 8.0, 1e-12)
                accepted = True
                if improvement <= rtol * max(rss, 1e-300):
                    converged = True
                break
            lam *= 8.0
        if not accepted or converged:
            break

    if jac is None:
        jac = jacobian(p, r)
    a = jac.T @ jac
    cov = _covariance(a)
    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(names=names, values=p, stderr=stderr, rss=rss,
                     converged=converged, covariance=cov)


def _covariance(normal_matrix):
    """Invert J'J by SVD; directions without curvature get large variance.

    A plain (pseudo-)inverse assigns *zero* variance to null directions of the
    normal matrix, which misreports an unidentifiable parameter as perfectly
    known; capping the inverse singular values keeps those variances huge.
    """
    u, s, vt = np.linalg.svd(normal_matrix)
    s_floor = max(s[0], 1e-300) * np.finfo(float).eps
    cov = (vt.T * (1.0 / np.maximum(s, s_floor))) @ vt
    return 0.5 * (cov + cov.T)


# ---------------------------------------------------------------------------
# the two experiment models

def time_scan_model(tau, params):
    """f(p0, nu, T2, v): coherent oscillation plus classical decay."""
    p0, nu, t2, v = params
    return population_dynamics(tau, p0, nu, abs(t2), abs(v))


def flux_fringe_model(n, params):
    """g(a, xi, theta0, h) = (a/2) cos(2 pi xi n + theta0) + h."""
    a, xi, theta0, h = params
    return 0.5 * a * np.cos(2 * np.pi * xi * np.asarray(n, dtype=float) + theta0) + h


NU_GRID = np.arange(0.5, 30.0 + 1e-9, 0.5)  # Hz; multi-start against aliasing


def _fit_weights(series):
    return 1.0 / _regularized_sigma(series.probabilities, series.shots_per_point)


def fit_time_scan(series: ShotSeries, nu_grid=None):
    """Fit the time-scan model to a ShotSeries with binomial weights.

    Runs a short Levenberg-Marquardt from every frequency on `nu_grid`
    (default 0.5-30 Hz in 0.5 Hz steps) and polishes the best start, which
    guards against aliasing onto a wrong oscillation frequency.  On a uniform
    time grid frequencies differing by multiples of 1/dt produce identical
    samples, so the fitted frequency is folded into [0, 1/(2 dt)]; its
    standard error is fold-invariant.
    """
    if len(series.axis) < 8:
        raise ValueError("need at least 8 points to fit the time-scan model")
    if np.ptp(series.axis) <= 0:
        raise ValueError("time axis must span a nonzero range")
    weights = _fit_weights(series)
    tau_max = float(np.max(series.axis))
    grid = NU_GRID if nu_grid is None else np.asarray(nu_grid, dtype=float)
    names = ("p0", "nu", "T2", "v")

    best = None
    for nu0 in grid:
        start = np.array([0.2, nu0, tau_max, 2.0 / tau_max])
        fit = weighted_nlls(time_scan_model, start, series.axis,
                            series.probabilities, weights, names=names,
                            max_iter=60)
        if best is None or fit.rss < best.rss:
            best = fit
    fit = weighted_nlls(time_scan_model, best.values, series.axis,
                        series.probabilities, weights, names=names)
    # the model is even in T2 and v; report the physical sign
    values = fit.values.copy()
    values[2] = abs(values[2])
    values[3] = abs(values[3])
    values[1] = _fold_frequency(values[1], series.axis)
    return _scaled_errors(
        FitResult(fit.names, values, fit.stderr, fit.rss, fit.converged,
                  fit.covariance),
        len(series.axis),
    )


def _scaled_errors(fit: FitResult, n_points):
    """PDG-style scale factor: inflate errors by sqrt(chi2/dof) when > 1.

    The binomial weights are estimated from the observed counts, so excess
    scatter is absorbed into the uncertainties; errors are never deflated.
    """
    dof = n_points - len(fit.values)
    if dof <= 0:
        return fit
    scale = float(np.sqrt(max(1.0, fit.rss / dof)))
    return FitResult(fit.names, fit.values, fit.stderr * scale, fit.rss,
                     fit.converged, fit.covariance * scale**2)


def _fold_frequency(nu, axis):
    """Map an aliased oscillation frequency into [0, 1/(2 dt)].

    Only applies on uniform grids, where cos(2 pi nu t) is exactly invariant
    under nu -> nu + k/dt and nu -> -nu at the sample points.
    """
    steps = np.diff(np.sort(axis))
    dt = float(np.median(steps))
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
        return abs(nu)
    rate = 1.0 / dt
    folded = np.mod(nu, rate)
    return float(min(folded, rate - folded))


def fit_flux_scan(series: ShotSeries):
    """Fit the cosine fringe to a flux-scan ShotSeries.

    The fitted `xi` estimates the fringe period in flux quanta.  A fringe
    whose peak exceeds unit probability (a/2 + h > 1) triggers a warning but
    is returned as fitted.
    """
    if len(series.axis) < 8:
        raise ValueError("need at least 8 points to fit the flux fringe")
    if np.ptp(series.axis) < 1.5:
        raise ValueError("flux scan must span at least 1.5 fringe periods")
    weights = _fit_weights(series)
    p = series.probabilities
    names = ("a", "xi", "theta0", "h")
    amp0 = max(float(np.ptp(p)), 1e-3)
    best = None
    for xi0 in (0.5, 0.75, 1.0, 1.25, 1.5, 2.0):
        for th0 in (0.0, 0.5 * np.pi, np.pi, 1.5 * np.pi):
            start = np.array([amp0, xi0, th0, float(np.mean(p))])
            fit = weighted_nlls(flux_fringe_model, start, series.axis, p,
                                weights, names=names, max_iter=60)
            if best is None or fit.rss < best.rss:
                best = fit
    fit = weighted_nlls(flux_fringe_model, best.values, series.axis, p,
                        weights, names=names)
    values = fit.values.copy()
    # a cosine with negative amplitude is the same fringe phase-shifted by pi
    if values[0] < 0:
        values[0] = -values[0]
        values[2] += np.pi
    values[1] = abs(values[1])
    values[2] = float(np.mod(values[2], 2 * np.pi))
    if 0.5 * values[0] + values[3] > 1.0:
        warnings.warn(
            "fitted fringe peaks above unit probability (a/2 + h > 1)",
            stacklevel=2,
        )
    return _scaled_errors(
        FitResult(fit.names, values, fit.stderr, fit.rss, fit.converged,
                  fit.covariance),
        len(series.axis),
    )
