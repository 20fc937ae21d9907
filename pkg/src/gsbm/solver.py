"""Alternating proximal / conditional-gradient solver for the penalized
decomposition of a partially observed adjacency matrix.

The model writes the observed adjacency A as L + S + S^T on the examined
dyads, with L low rank (nuclear-norm penalty lambda1) and S column-sparse
(column-wise 2,1-norm penalty lambda2). A small ridge term epsilon keeps the
problem strongly convex. Each iteration performs

  1. a proximal gradient step on S (column-wise soft thresholding),
  2. an adaptive bound on the nuclear-ball radius from the current objective,
  3. a linear minimization oracle over the nuclear ball (top singular pair),
  4. a conditional-gradient update of (L, R) with an explicit step size.

The augmented objective decreases at every step, which the tests assert.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ConvergenceError
from .linalg import as_square, group_norm_21, masked_residual, top_singular_pair

# Iteration budget for the top-singular-pair computation inside the solver;
# clustered spectra near convergence terminate earlier via the plateau rule.
_LMO_MAX_ITER = 20000


@dataclass(frozen=True)
class SolverConfig:
    """Penalties and iteration controls.

    eta defaults to its largest admissible value 1/(2 + epsilon); larger
    values would break the descent guarantee of the proximal step.
    """

    lambda1: float
    lambda2: float
    epsilon: float = 1e-3
    eta: float | None = None
    max_iters: int = 500
    rel_tol: float = 1e-6
    svd_tol: float = 1e-9

    def __post_init__(self):
        if self.lambda1 < 0.0:
            raise ConfigError(f"lambda1 must be nonnegative, got {self.lambda1}")
        if self.lambda2 < 0.0:
            raise ConfigError(f"lambda2 must be nonnegative, got {self.lambda2}")
        if self.epsilon <= 0.0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        limit = 1.0 / (2.0 + self.epsilon)
        if self.eta is None:
            object.__setattr__(self, "eta", limit)
        elif not 0.0 < self.eta <= limit * (1.0 + 1e-12):
            raise ConfigError(
                f"eta must lie in (0, 1/(2+epsilon)] = (0, {limit:.6g}], got {self.eta}"
            )
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.rel_tol <= 0.0:
            raise ConfigError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.svd_tol <= 0.0:
            raise ConfigError(f"svd_tol must be positive, got {self.svd_tol}")


@dataclass(frozen=True)
class SolverState:
    """One iterate: low-rank part L, column-sparse part S, radius surrogate R."""

    L: np.ndarray
    S: np.ndarray
    R: float
    t: int
    phi: float


@dataclass(frozen=True)
class FitResult:
    L_hat: np.ndarray
    S_hat: np.ndarray
    objective_trace: np.ndarray
    iterations: int
    converged: bool
    config_echo: SolverConfig


def objective_f(A, omega, S, L, cfg):
    """Unaugmented objective: masked least squares + lambda1*||L||_* + lambda2*||S||_{2,1}."""
    res = masked_residual(A, omega, L, S)
    nuclear = float(np.linalg.svd(np.asarray(L, dtype=np.float64), compute_uv=False).sum())
    return (
        0.5 * float(np.vdot(res, res))
        + cfg.lambda1 * nuclear
        + cfg.lambda2 * group_norm_21(S)
    )


def objective_phi(A, omega, S, L, R, cfg):
    """Augmented objective with the radius surrogate R in place of ||L||_*.

    Adds the ridge term (epsilon/2)(||L||_F^2 + ||S||_F^2). Coincides with
    objective_f when epsilon = 0 and R = ||L||_*.
    """
    res = masked_residual(A, omega, L, S)
    L = np.asarray(L, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    return (
        0.5 * float(np.vdot(res, res))
        + cfg.lambda1 * R
        + cfg.lambda2 * group_norm_21(S)
        + 0.5 * cfg.epsilon * (float(np.vdot(L, L)) + float(np.vdot(S, S)))
    )


def grad_s(A, omega, S, L, cfg):
    """Gradient of the smooth part with respect to S: -2*masked residual + epsilon*S.

    The factor 2 reflects that S enters the residual twice (as S and S^T);
    the formula assumes A, omega and L symmetric.
    """
    return -2.0 * masked_residual(A, omega, L, S) + cfg.epsilon * np.asarray(S, dtype=np.float64)


def grad_l(A, omega, S, L, cfg):
    """Gradient of the smooth part with respect to L: -masked residual + epsilon*L."""
    return -masked_residual(A, omega, L, S) + cfg.epsilon * np.asarray(L, dtype=np.float64)


def prox_s_update(S_prev, G_S, cfg):
    """Proximal gradient step on S: column-wise soft thresholding.

    Each column of S_prev - eta*G_S is scaled by (1 - eta*lambda2/norm)_+,
    so columns with norm at most eta*lambda2 come out exactly zero.
    """
    S_prev = as_square(S_prev, "S_prev")
    G_S = as_square(G_S, "G_S")
    M = S_prev - cfg.eta * G_S
    thresh = cfg.eta * cfg.lambda2
    norms = np.sqrt((M * M).sum(axis=0))
    scale = np.zeros_like(norms)
    alive = norms > thresh
    scale[alive] = 1.0 - thresh / norms[alive]
    return M * scale[np.newaxis, :]


def upper_bound_r(phi_prev, cfg):
    """Adaptive bound on the nuclear-ball radius: previous objective / lambda1.

    Valid because the optimum's nuclear norm times lambda1 never exceeds the
    current objective value (all terms are nonnegative).
    """
    if cfg.lambda1 <= 0.0:
        raise ConfigError("lambda1 must be positive: the nuclear bound divides by it")
    return float(phi_prev) / cfg.lambda1


def lmo_direction(G_L, R_bar, cfg, svd_tol=None):
    """Minimizer of <Z, G_L> + lambda1*R over ||Z||_* <= R <= R_bar.

    Closed form: (0, 0) when lambda1 >= sigma1(G_L); otherwise the rank-one
    atom -R_bar * u1 v1^T with R = R_bar. For a (bitwise) symmetric gradient
    the atom is symmetrized, which is exact in theory (u1 = +/- v1) and keeps
    the L iterate exactly symmetric in floating point.
    """
    G_L = as_square(G_L, "G_L")
    if R_bar < 0.0:
        raise ConfigError(f"R_bar must be nonnegative, got {R_bar}")
    tol = cfg.svd_tol if svd_tol is None else svd_tol
    sigma1, u1, v1 = top_singular_pair(G_L, tol=tol, max_iter=_LMO_MAX_ITER)
    n = G_L.shape[0]
    if cfg.lambda1 >= sigma1:
        return np.zeros((n, n)), 0.0
    if np.array_equal(G_L, G_L.T):
        atom = 0.5 * (np.outer(u1, v1) + np.outer(v1, u1))
    else:
        atom = np.outer(u1, v1)
    return -R_bar * atom, float(R_bar)


def step_size(L_prev, R_prev, L_tilde, R_tilde, G_L, cfg):
    """Step length for the conditional-gradient update, clamped to [0, 1].

    Minimizes the quadratic majorant of the objective along the segment
    towards (L_tilde, R_tilde); returns 0 for a degenerate direction.
    """
    L_prev = as_square(L_prev, "L_prev")
    L_tilde = as_square(L_tilde, "L_tilde")
    G_L = as_square(G_L, "G_L")
    D = L_tilde - L_prev
    denom = (1.0 + cfg.epsilon) * float(np.vdot(D, D))
    if denom == 0.0:
        return 0.0
    numer = float(np.vdot(L_prev - L_tilde, G_L)) + cfg.lambda1 * (R_prev - R_tilde)
    return min(1.0, max(0.0, numer / denom))


def mcgd_iterate(state, A, omega, cfg):
    """One full iteration: prox step on S, then conditional-gradient step on (L, R).

    The nuclear bound is computed from the post-prox objective value, matching
    the gradient used in the (L, R) step. The returned state's phi never
    exceeds the incoming one.
    """
    G_S = grad_s(A, omega, state.S, state.L, cfg)
    S_new = prox_s_update(state.S, G_S, cfg)
    phi_mid = objective_phi(A, omega, S_new, state.L, state.R, cfg)
    R_bar = upper_bound_r(phi_mid, cfg)
    G_L = grad_l(A, omega, S_new, state.L, cfg)
    L_tilde, R_tilde = lmo_direction(G_L, R_bar, cfg)
    beta = step_size(state.L, state.R, L_tilde, R_tilde, G_L, cfg)
    L_new = state.L + beta * (L_tilde - state.L)
    R_new = state.R + beta * (R_tilde - state.R)
    phi_new = objective_phi(A, omega, S_new, L_new, R_new, cfg)
    return SolverState(L=L_new, S=S_new, R=R_new, t=state.t + 1, phi=phi_new)


def initial_state(A, omega, cfg):
    """All-zero starting point; its objective equals the observed edge count."""
    A = as_square(A, "A")
    n = A.shape[0]
    zeros = np.zeros((n, n))
    phi0 = objective_phi(A, omega, zeros, zeros, 0.0, cfg)
    return SolverState(L=zeros, S=zeros.copy(), R=0.0, t=0, phi=phi0)


def fit(A, omega, cfg):
    """Run the solver from zero until the relative objective decrease stalls.

    Stops when (phi_prev - phi) / phi_prev < rel_tol or after max_iters
    iterations; the full objective trace is recorded. Non-convergence of the
    inner singular-pair computation is re-raised with the iteration index.
    """
    A = as_square(A, "A")
    omega = as_square(omega, "omega")
    if cfg.lambda1 <= 0.0:
        raise ConfigError("fit requires lambda1 > 0 (zero disables the nuclear bound)")
    state = initial_state(A, omega, cfg)
    trace = [state.phi]
    converged = False
    for _ in range(cfg.max_iters):
        phi_prev = state.phi
        try:
            state = mcgd_iterate(state, A, omega, cfg)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"iteration {state.t + 1}: {err}",
                residual=err.residual,
                iterations=err.iterations,
            ) from err
        trace.append(state.phi)
        rel_drop = (phi_prev - state.phi) / phi_prev if phi_prev > 0.0 else 0.0
        if rel_drop < cfg.rel_tol:
            converged = True
            break
    return FitResult(
        L_hat=state.L,
        S_hat=state.S,
        objective_trace=np.asarray(trace),
        iterations=state.t,
        converged=converged,
        config_echo=cfg,
    )
