"""Dense symmetric-matrix primitives used by the solver and post-fit analysis.

All matrices are plain float64 numpy arrays. Everything here is a pure,
deterministic function: iterative routines start from a fixed seeded vector,
and the returned singular/eigen vectors follow a fixed sign convention
(first non-negligible coordinate positive), so repeated calls on identical
inputs are bitwise identical.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConvergenceError, ShapeError

# Fixed entropy for the power-iteration start vector. Using the same start
# for a given dimension keeps results reproducible across calls and platforms.
_START_SEED = 20240601

# Plateau detection for clustered spectra: when the best residual seen has not
# halved over the last _PLATEAU_WINDOW iterations, the iterate has settled
# inside a (near-)degenerate invariant subspace and the best vector found so
# far is accepted (transient stalls are shorter than the window).
_PLATEAU_WINDOW = 200
_PLATEAU_FACTOR = 0.5


def as_square(M, name="matrix"):
    """Coerce to a square float64 array, rejecting non-square input."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")
    return M


def _require_same_n(*mats):
    n = mats[0].shape[0]
    for M in mats[1:]:
        if M.shape[0] != n:
            raise ShapeError(
                f"matrix dimensions disagree: {n} vs {M.shape[0]}"
            )
    return n


def masked_residual(A, omega, L, S):
    """Residual of the additive decomposition on the observed entries.

    Entry (i, j) equals omega[i,j] * (A[i,j] - L[i,j] - S[i,j] - S[j,i]).
    The result is symmetric whenever A, omega and L are.
    """
    A = as_square(A, "A")
    omega = as_square(omega, "omega")
    L = as_square(L, "L")
    S = as_square(S, "S")
    _require_same_n(A, omega, L, S)
    # S + S.T first: the symmetrized term is bitwise symmetric, so the whole
    # residual is whenever A, omega and L are.
    return omega * (A - L - (S + S.T))


def group_norm_21(S):
    """Sum of the Euclidean norms of the columns of S."""
    S = np.asarray(S, dtype=np.float64)
    return float(np.sqrt((S * S).sum(axis=0)).sum())


def _fix_sign(u, v=None):
    """Flip (u, v) jointly so the first non-negligible coordinate of u is > 0."""
    scale = np.abs(u).max()
    if scale == 0.0:
        return u, v
    idx = np.argmax(np.abs(u) > 1e-8 * scale)
    if u[idx] < 0.0:
        u = -u
        if v is not None:
            v = -v
    return u, v


def _start_vector(n, rng=None):
    rng = np.random.default_rng(_START_SEED) if rng is None else rng
    v = rng.standard_normal(n)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:  # cannot happen with a Gaussian draw; belt and braces
        v = np.zeros(n)
        v[0] = 1.0
        return v
    return v / nrm


def top_singular_pair(M, tol=1e-9, max_iter=1000, v0=None):
    """Dominant singular triple (sigma1, u1, v1) of a square matrix.

    Power iteration on the Gram operator, stopped when the coupled residual
    ||M^T u - sigma v|| falls below tol * max(1, sigma), or when the residual
    plateaus (clustered top singular values: any vector of the dominant
    invariant subspace is then returned). Raises ConvergenceError, carrying
    the last residual, if neither happens within max_iter iterations.
    """
    M = as_square(M, "M")
    if not np.all(np.isfinite(M)):
        raise ShapeError("matrix contains non-finite entries")
    if tol <= 0.0:
        raise ShapeError(f"tol must be positive, got {tol}")
    n = M.shape[0]
    if not M.any():
        e1 = np.zeros(n)
        e1[0] = 1.0
        return 0.0, e1, e1.copy()

    rng = np.random.default_rng(_START_SEED)
    if v0 is not None:
        v = np.asarray(v0, dtype=np.float64).copy()
        nrm = np.linalg.norm(v)
        v = v / nrm if nrm > 0 else _start_vector(n, rng)
    else:
        v = _start_vector(n, rng)

    best_trace = []
    best = None  # (residual, sigma, u, v)
    for _ in range(max_iter):
        w = M @ v
        sigma = float(np.linalg.norm(w))
        if sigma == 0.0:
            # v fell in the nullspace; restart from a fresh deterministic draw
            v = _start_vector(n, rng)
            continue
        u = w / sigma
        z = M.T @ u
        res = float(np.linalg.norm(z - sigma * v))
        if best is None or res < best[0]:
            best = (res, sigma, u, v)
        if res <= tol * max(1.0, sigma):
            u, v = _fix_sign(u, v)
            return sigma, u, v
        best_trace.append(best[0])
        if (
            len(best_trace) > _PLATEAU_WINDOW
            and best_trace[-1] >= _PLATEAU_FACTOR * best_trace[-1 - _PLATEAU_WINDOW]
        ):
            _, sigma, u, v = best
            u, v = _fix_sign(u, v)
            return sigma, u, v
        v = z / np.linalg.norm(z)

    raise ConvergenceError(
        f"top singular pair did not converge in {max_iter} iterations "
        f"(best residual {best[0] if best else float('inf'):.3e})",
        residual=best[0] if best else None,
        iterations=max_iter,
    )


def top_eigenpairs(M, k, tol=1e-9, max_iter=1000):
    """First k eigenpairs of a symmetric matrix, eigenvalues sorted descending.

    Deflated power iteration on the shifted operator M + c*I (c an infinity
    norm bound, making the target eigenvalue dominant). Returns (values,
    vectors) with vectors in columns, each sign-fixed. Residuals are checked
    on M itself, so degenerate spectra terminate immediately.
    """
    M = as_square(M, "M")
    n = M.shape[0]
    if not (1 <= k <= n):
        raise ShapeError(f"k must be in [1, {n}], got {k}")
    if tol <= 0.0:
        raise ShapeError(f"tol must be positive, got {tol}")

    shift = float(np.abs(M).sum(axis=1).max())
    values = np.zeros(k)
    vectors = np.zeros((n, k))
    rng = np.random.default_rng(_START_SEED)

    for j in range(k):
        found = vectors[:, :j]
        v = _start_vector(n, rng)
        if j:
            v = v - found @ (found.T @ v)
            nrm = np.linalg.norm(v)
            while nrm < 1e-12:
                v = _start_vector(n, rng)
                v = v - found @ (found.T @ v)
                nrm = np.linalg.norm(v)
            v /= nrm

        best_trace = []
        best = None  # (residual, vector)
        converged = False
        for _ in range(max_iter):
            lam = float(v @ (M @ v))
            res = float(np.linalg.norm(M @ v - lam * v))
            if best is None or res < best[0]:
                best = (res, v)
            if res <= tol * max(1.0, abs(lam)):
                converged = True
                break
            best_trace.append(best[0])
            if (
                len(best_trace) > _PLATEAU_WINDOW
                and best_trace[-1] >= _PLATEAU_FACTOR * best_trace[-1 - _PLATEAU_WINDOW]
            ):
                v = best[1]
                converged = True
                break
            y = M @ v + shift * v
            if j:
                y = y - found @ ((values[:j] + shift) * (found.T @ v))
                y = y - found @ (found.T @ y)
            nrm = np.linalg.norm(y)
            if nrm < 1e-300:
                v = _start_vector(n, rng)
                if j:
                    v = v - found @ (found.T @ v)
                    v /= np.linalg.norm(v)
                continue
            v = y / nrm

        if not converged:
            raise ConvergenceError(
                f"eigenpair {j + 1} did not converge in {max_iter} iterations "
                f"(best residual {best[0] if best else float('inf'):.3e})",
                residual=best[0] if best else None,
                iterations=max_iter,
            )
        v, _ = _fix_sign(v)
        values[j] = float(v @ (M @ v))
        vectors[:, j] = v

    return values, vectors


def eigenvector_k(M, k, tol=1e-9, max_iter=1000):
    """Unit eigenvector for the k-th largest eigenvalue of a symmetric matrix."""
    _, vectors = top_eigenpairs(M, k, tol=tol, max_iter=max_iter)
    return vectors[:, k - 1]
