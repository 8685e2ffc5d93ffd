"""Normal modes of an ion crystal: spectra, labels, and confinement sweeps.

Modes are eigenpairs of the mass-scaled Hessian at a converged equilibrium.
Because all ions share one mass, uniform translations are exact eigenvectors
with the bare trap frequencies; they are split off analytically and the
remaining block is diagonalized with the in-house Jacobi routine.
"""

import io
import json
from dataclasses import dataclass, replace

import numpy as np

from . import crystal as _crystal
from .crystal import IonCrystal, find_equilibrium
from .numerics import jacobi_eigh

COM_OVERLAP_MIN = 0.99
PATTERN_OVERLAP_MIN = 0.9
# squared-frequency threshold (units of wz^2) below which a mode counts as zero
ZERO_MODE_TOL = 1e-6

COM_LABELS = ("com_x", "com_y", "com_z")


@dataclass(frozen=True)
class ModeSpectrum:
    """3N normal modes, sorted by ascending frequency.

    frequencies : (3N,) angular frequencies in rad/s
    vectors : (3N, 3N) array; row i (reshaped to (N, 3)) is the dimensionless,
        orthonormal displacement pattern of mode i
    labels : per-mode tag in {rotational, zigzag, com_x, com_y, com_z, other}
    stability : False when any squared frequency is negative beyond tolerance
    """

    frequencies: np.ndarray
    vectors: np.ndarray
    labels: tuple
    stability: bool

    def frequency(self, label):
        """Frequency (rad/s) of the unique mode carrying `label`."""
        idx = [i for i, l in enumerate(self.labels) if l == label]
        if len(idx) != 1:
            raise KeyError(f"label {label!r} matched {len(idx)} modes")
        return float(self.frequencies[idx[0]])


def hessian(crys: IonCrystal):
    """Analytic second derivatives of the potential at the crystal, J/m^2.

    Exact (not finite-differenced) and symmetric to machine precision.
    """
    if not crys.converged:
        raise ValueError("hessian requires a converged crystal")
    trap = crys.trap
    u = np.asarray(crys.positions, dtype=float) / trap.length_scale
    ax, ay = trap.anisotropies
    h = _crystal._hessian_dimless(u, ax, ay)
    return h * (trap.ion_mass * trap.omega_z**2)


def _com_templates(n):
    t = np.zeros((3, 3 * n))
    for axis in range(3):
        t[axis, axis::3] = 1.0 / np.sqrt(n)
    return t


def _rotation_template(positions):
    """Rigid rotation generator about y at the equilibrium, COM-projected."""
    c = positions - positions.mean(axis=0)
    gen = np.zeros_like(c)
    gen[:, 0] = c[:, 2]
    gen[:, 2] = -c[:, 0]
    v = gen.ravel()
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def _zigzag_template(positions):
    """Alternating transverse (x) pattern on ions ordered along z, COM-projected."""
    n = positions.shape[0]
    order = np.argsort(positions[:, 2], kind="stable")
    pattern = np.zeros(n)
    pattern[order] = (-1.0) ** np.arange(n)
    pattern -= pattern.mean()
    v = np.zeros(3 * n)
    v[0::3] = pattern
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


def normal_modes(crys: IonCrystal):
    """Eigen-decomposition of the mass-scaled Hessian, with labels attached.

    The three uniform-translation modes are exact and carry the bare trap
    frequencies; the orthogonal complement is diagonalized by cyclic Jacobi
    rotations.  A configuration with a squared frequency below
    ``-(ZERO_MODE_TOL * wz)^2`` is a saddle and is returned with
    ``stability=False``.
    """
    trap = crys.trap
    n = trap.n_ions
    d = hessian(crys) / trap.ion_mass
    templates = _com_templates(n)
    com_freq2 = np.array([trap.omega_x**2, trap.omega_y**2, trap.omega_z**2])

    if n == 1:
        freqs = np.sqrt(com_freq2)
        order = np.argsort(freqs)
        spec = ModeSpectrum(freqs[order], templates[order], ("",) * 3, True)
        return classify_modes(spec, crys)

    eigvals = list(com_freq2)
    eigvecs = [templates[0], templates[1], templates[2]]
    # for the planar crystal (all y = 0) the Hessian is exactly block-diagonal
    # between in-plane (x, z) and out-of-plane (y) coordinates; diagonalizing
    # the sectors separately keeps eigenvectors symmetry-pure at accidental
    # degeneracies between the sectors
    planar = np.max(np.abs(crys.positions[:, 1])) < 1e-9 * trap.length_scale
    if planar:
        sectors = [
            np.sort(np.concatenate([np.arange(0, 3 * n, 3), np.arange(2, 3 * n, 3)])),
            np.arange(1, 3 * n, 3),
        ]
        sector_templates = [templates[[0, 2]], templates[[1]]]
    else:
        sectors = [np.arange(3 * n)]
        sector_templates = [templates]
    for idx, tmpl in zip(sectors, sector_templates):
        block = d[np.ix_(idx, idx)]
        sub_t = tmpl[:, idx]
        q, _ = np.linalg.qr(sub_t.T, mode="complete")
        comp = q[:, sub_t.shape[0]:]
        w, v = jacobi_eigh(comp.T @ block @ comp)
        vecs = comp @ v
        for k in range(len(w)):
            full = np.zeros(3 * n)
            full[idx] = vecs[:, k]
            eigvals.append(w[k])
            eigvecs.append(full)
    eigvals = np.asarray(eigvals)
    eigvecs = np.asarray(eigvecs)

    order = np.argsort(eigvals, kind="stable")
    eigvals = eigvals[order]
    eigvecs = eigvecs[order]
    tol2 = (ZERO_MODE_TOL * trap.omega_z) ** 2
    stable = bool(eigvals[0] >= -tol2)
    freqs = np.sqrt(np.clip(eigvals, 0.0, None))
    spec = ModeSpectrum(freqs, eigvecs, ("",) * (3 * n), stable)
    return classify_modes(spec, crys)


def classify_modes(spectrum: ModeSpectrum, crys: IonCrystal):
    """Label modes by overlap with translation, rotation, and zigzag patterns.

    COM labels need overlap >= 0.99 with a uniform translation; rotational and
    zigzag need >= 0.9 with their patterns, ties resolved by the larger
    overlap.  Anything unmatched is labelled ``other``.
    """
    n = crys.trap.n_ions
    vectors = spectrum.vectors
    labels = ["other"] * len(spectrum.frequencies)

    com = _com_templates(n)
    for axis, label in enumerate(COM_LABELS):
        ov = np.abs(vectors @ com[axis])
        best = int(np.argmax(ov))
        if ov[best] >= COM_OVERLAP_MIN:
            labels[best] = label

    patterns = {
        "rotational": _rotation_template(crys.positions),
        "zigzag": _zigzag_template(crys.positions),
    }
    # claims resolved globally by descending overlap so ties go to the winner
    claims = []
    for name, template in patterns.items():
        if np.linalg.norm(template) == 0:
            continue
        ov = np.abs(vectors @ template)
        for i in np.argsort(ov)[::-1]:
            if ov[i] >= PATTERN_OVERLAP_MIN:
                claims.append((float(ov[i]), name, int(i)))
    claims.sort(reverse=True)
    taken_modes = set()
    taken_names = set()
    for ov, name, i in claims:
        if name in taken_names or i in taken_modes or labels[i] != "other":
            continue
        labels[i] = name
        taken_modes.add(i)
        taken_names.add(name)
    return replace(spectrum, labels=tuple(labels))


# ---------------------------------------------------------------------------
# confinement sweep

@dataclass(frozen=True)
class SweepPoint:
    omega_x: float
    crystal: IonCrystal
    spectrum: ModeSpectrum
    track_labels: tuple  # continuity-tracked labels, same order as frequencies


@dataclass(frozen=True)
class SweepResult:
    points: tuple

    def to_csv(self):
        labels = self.points[0].track_labels
        buf = io.StringIO()
        buf.write("# omega_x_hz," + ",".join(f"{l}_hz" for l in labels) + "\n")
        for p in self.points:
            by_label = dict(zip(p.track_labels, p.spectrum.frequencies))
            row = [f"{p.omega_x / (2 * np.pi):.9e}"]
            row += [f"{by_label[l] / (2 * np.pi):.9e}" for l in labels]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_json(self, indent=None):
        payload = {
            "schema_version": 1,
            "points": [
                {
                    "omega_x_hz": p.omega_x / (2 * np.pi),
                    "frequencies_hz": (p.spectrum.frequencies / (2 * np.pi)).tolist(),
                    "labels": list(p.track_labels),
                    "vectors": p.spectrum.vectors.tolist(),
                }
                for p in self.points
            ],
        }
        return json.dumps(payload, indent=indent)

    def frequencies(self, label):
        """(omega_x, frequency) pairs in rad/s for one tracked label."""
        out = []
        for p in self.points:
            by_label = dict(zip(p.track_labels, p.spectrum.frequencies))
            out.append((p.omega_x, by_label[label]))
        return np.array(out)


def _solve_point(trap, omega_x, seed=None):
    t = replace(trap, omega_x=omega_x)
    crys = find_equilibrium(t, seed=seed)
    return crys, normal_modes(crys)


def _canonical_reference(trap, omega_x):
    """Up-class equilibrium used to seed every sweep point.

    Seeding all points from one configuration keeps the orientation class and
    the ion labelling continuous across the sweep, which eigenvector-overlap
    tracking requires; the x mirror maps the 'down' class onto 'up' without
    changing the energy.
    """
    crys, _ = _solve_point(trap, omega_x)
    pos = np.asarray(crys.positions).copy()
    if np.real(_crystal.orientation_parameter(pos)) < 0:
        pos[:, 0] *= -1.0
    return pos


def sweep_confinement(trap, omega_x_range, steps, adaptive=True, max_refine=6,
                      jobs=1):
    """Sweep the radial confinement, tracking modes by eigenvector overlap.

    Parameters
    ----------
    trap : template TrapConfig; its omega_x is replaced by each sweep value
    omega_x_range : (low, high) in rad/s
    steps : number of initial grid points, >= 2
    adaptive : insert midpoints while any tracked frequency changes by more
        than 20% between neighbours (refined at most `max_refine` times)
    jobs : solve grid points in this many worker processes when > 1

    Modes are matched between neighbouring points by the largest absolute
    eigenvector overlap, never by sort order, and track labels propagate
    through points where instantaneous classification is ambiguous.
    """
    lo, hi = omega_x_range
    if steps < 2:
        raise ValueError("sweep needs at least 2 steps")
    if not (0 < lo <= hi):
        raise ValueError("invalid omega_x range")
    grid = list(np.linspace(lo, hi, steps))
    solved = {}
    ref_positions = _canonical_reference(trap, grid[0])

    def solve_many(values):
        todo = [w for w in values if w not in solved]
        if not todo:
            return
        seeds = [ref_positions] * len(todo)
        if jobs > 1:
            import concurrent.futures as cf

            with cf.ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_solve_point, [trap] * len(todo), todo,
                                      seeds))
        else:
            results = [_solve_point(trap, w, s) for w, s in zip(todo, seeds)]
        for w, res in zip(todo, results):
            solved[w] = res

    solve_many(grid)
    if adaptive:
        for _ in range(max_refine):
            grid.sort()
            new = []
            for a, b in zip(grid[:-1], grid[1:]):
                fa = solved[a][1].frequencies
                fb = _match_to(solved[a][1], solved[b][1])
                scale = np.maximum(np.maximum(fa, fb), 1e-6 * trap.omega_z)
                if np.max(np.abs(fa - fb) / scale) > 0.20:
                    new.append(0.5 * (a + b))
            if not new:
                break
            solve_many(new)
            grid.extend(new)
    grid.sort()

    # sequential tracking pass: chain mode identities through the overlap
    # permutations, then name each track by its per-point classifications
    from collections import Counter

    n_modes = 3 * trap.n_ions
    ids_per_point = []
    prev_spec = None
    prev_ids = list(range(n_modes))
    for w in grid:
        _, spec = solved[w]
        if prev_spec is not None:
            perm = _overlap_permutation(prev_spec, spec)
            ids = [0] * n_modes
            for i_prev, i_new in enumerate(perm):
                ids[i_new] = prev_ids[i_prev]
            prev_ids = ids
        ids_per_point.append(list(prev_ids))
        prev_spec = spec

    votes = {tid: Counter() for tid in range(n_modes)}
    for w, ids in zip(grid, ids_per_point):
        _, spec = solved[w]
        for mode_idx, tid in enumerate(ids):
            if spec.labels[mode_idx] != "other":
                votes[tid][spec.labels[mode_idx]] += 1
    claims = sorted(
        ((count, tid, name) for tid, c in votes.items()
         for name, count in c.items()),
        key=lambda t: (-t[0], t[1]),
    )
    names = {}
    taken = set()
    for count, tid, name in claims:
        if tid in names or name in taken:
            continue
        names[tid] = name
        taken.add(name)
    k = 0
    for tid in range(n_modes):
        if tid not in names:
            k += 1
            names[tid] = f"other_{k}"

    points = []
    for w, ids in zip(grid, ids_per_point):
        crys, spec = solved[w]
        points.append(
            SweepPoint(w, crys, spec, tuple(names[tid] for tid in ids))
        )
    return SweepResult(tuple(points))


def _match_to(spec_a, spec_b):
    """Frequencies of spec_b reordered onto spec_a's modes by overlap."""
    perm = _overlap_permutation(spec_a, spec_b)
    return spec_b.frequencies[perm]


def _overlap_permutation(spec_a, spec_b):
    """Optimal one-to-one assignment of b's modes to a's by total |overlap|."""
    from scipy.optimize import linear_sum_assignment

    ov = np.abs(spec_a.vectors @ spec_b.vectors.T)
    rows, cols = linear_sum_assignment(-ov)
    perm = np.empty(ov.shape[0], dtype=int)
    perm[rows] = cols
    return perm
