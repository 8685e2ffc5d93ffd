"""Dense numerical kernels: a damped Newton minimizer and a Jacobi eigensolver.

Both operate on tiny problems (a few dozen unknowns at most), so clarity and
reproducibility win over asymptotic speed.
"""

import numpy as np

from .errors import ConvergenceError

_EPS = np.finfo(float).eps


def damped_newton(fun, grad, hess, x0, gtol=1e-12, max_iter=200):
    """Minimize a smooth function with damped Newton steps.

    Solves (H + mu*I) s = -g with the damping mu raised until the shifted
    Hessian is positive definite and the step decreases the function; at
    large mu the step degenerates into scaled steepest descent, which is the
    fallback when H is indefinite.  Convergence is declared on the gradient
    norm.

    Parameters
    ----------
    fun, grad, hess : callables of a flat parameter vector
    x0 : initial guess (flattened internally)
    gtol : gradient-norm tolerance
    max_iter : maximum Newton iterations

    Returns
    -------
    x, f, gnorm, n_iter

    Raises
    ------
    ConvergenceError
        If the gradient norm is still above `gtol` after `max_iter` steps;
        the message reports the last gradient norm.
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    n = x.size
    f = float(fun(x))
    mu = 0.0
    gnorm = np.inf
    for it in range(max_iter):
        g = np.asarray(grad(x), dtype=float).ravel()
        gnorm = float(np.linalg.norm(g))
        if gnorm < gtol:
            return x, f, gnorm, it
        h = np.asarray(hess(x), dtype=float)
        h = 0.5 * (h + h.T)
        accepted = False
        for _ in range(60):
            try:
                chol = np.linalg.cholesky(h + mu * np.eye(n))
            except np.linalg.LinAlgError:
                mu = max(10.0 * mu, 1e-10)
                continue
            step = -np.linalg.solve(chol.T, np.linalg.solve(chol, g))
            if g @ step >= 0.0:  # not a descent direction; damp harder
                mu = max(10.0 * mu, 1e-10)
                continue
            x_new = x + step
            f_new = float(fun(x_new))
            # accept non-increase within rounding so the last Newton step,
            # which lands at machine precision, is not rejected
            if f_new <= f + 64.0 * _EPS * (1.0 + abs(f)):
                x, f = x_new, f_new
                mu = mu / 4.0 if mu > 1e-14 else 0.0
                accepted = True
                break
            mu = max(10.0 * mu, 1e-10)
        if not accepted:
            break
    g = np.asarray(grad(x), dtype=float).ravel()
    gnorm = float(np.linalg.norm(g))
    if gnorm < gtol:
        return x, f, gnorm, max_iter
    raise ConvergenceError(
        f"damped Newton did not converge: gradient norm {gnorm:.3e} > {gtol:.1e} "
        f"after {max_iter} iterations"
    )


def jacobi_eigh(a, tol=1e-14, max_sweeps=60):
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps rotate away every off-diagonal element in row order until the
    off-diagonal Frobenius norm drops below ``tol`` times the Frobenius norm
    of the input.  Returns eigenvalues in ascending order and the matching
    eigenvectors as columns, mirroring ``numpy.linalg.eigh``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("jacobi_eigh expects a square matrix")
    n = a.shape[0]
    v = np.eye(n)
    fnorm = float(np.linalg.norm(a))
    if fnorm == 0.0 or n == 1:
        order = np.argsort(np.diag(a))
        return np.diag(a)[order], v[:, order]

    def offdiag_norm(m):
        off = m - np.diag(np.diag(m))
        return float(np.linalg.norm(off))

    for _ in range(max_sweeps):
        if offdiag_norm(a) <= tol * fnorm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.01 * tol * fnorm / n:
                    continue
                # classic stable rotation angle (Rutishauser)
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) if theta != 0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, -s], [s, c]])
                a[[p, q], :] = rot @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ rot.T
                a[p, q] = a[q, p] = 0.0
                v[:, [p, q]] = v[:, [p, q]] @ rot.T
    else:
        raise ConvergenceError(
            f"Jacobi sweeps exhausted: off-diagonal norm "
            f"{offdiag_norm(a):.3e} > {tol:.1e} * {fnorm:.3e}"
        )
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]
