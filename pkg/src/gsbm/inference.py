"""Post-fit analysis: plug-in penalty selection, outlier extraction with its
optimality certificate, link prediction, and sign-based community assignment.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, InputError
from .linalg import _fix_sign, as_square, top_eigenpairs

# Multipliers for the plug-in penalties lambda = C * sqrt(average observed
# degree); the nuclear penalty uses 84, the column penalty 19.
LAMBDA1_MULTIPLIER = 84.0
LAMBDA2_MULTIPLIER = 19.0

# Spectral gap below which the requested eigenvector is reported as degenerate.
_DEGENERATE_GAP = 1e-8


@dataclass(frozen=True)
class OutlierReport:
    """Column support of the sparse estimate plus the certificate quantities.

    detected lists the columns whose Euclidean norm exceeds the zero
    tolerance; certificate_lhs (filled only when the observed graph is
    supplied) holds the per-node norms that the optimality conditions compare
    against threshold = lambda2 / 2.
    """

    detected: np.ndarray
    column_norms: np.ndarray
    certificate_lhs: np.ndarray | None
    threshold: float


@dataclass(frozen=True)
class Prediction:
    pairs: np.ndarray
    scores: np.ndarray


@dataclass(frozen=True)
class CommunityReport:
    """Sign-rule labels (0/1 for inliers, -1 for detected outliers; None when
    k > 2), the detected outliers, a degeneracy flag for the relevant spectral
    gap, and the leading eigenvectors for caller-side clustering."""

    labels: np.ndarray | None
    outliers: np.ndarray
    degenerate: bool
    eigenvectors: np.ndarray


def observed_average_degree(A, omega):
    """Average number of observed edges per node, (sum of omega*A) / n."""
    A = as_square(A, "A")
    omega = as_square(omega, "omega")
    if A.shape != omega.shape:
        raise ConfigError("A and omega must have the same shape")
    if not omega.any():
        raise ConfigError("mask is empty: no dyad was examined")
    return float((omega * A).sum()) / A.shape[0]


def default_lambdas(A, omega):
    """Plug-in penalties (lambda1, lambda2) = (84, 19) * sqrt(observed avg degree).

    The observed average degree estimates the theory's connectivity level
    directly, with no rescaling by the sampling rate. An edgeless graph yields
    zero penalties and a warning.
    """
    d_obs = observed_average_degree(A, omega)
    if d_obs == 0.0:
        warnings.warn(
            "observed graph has no edges; plug-in penalties are zero",
            RuntimeWarning,
            stacklevel=2,
        )
    root = np.sqrt(d_obs)
    return LAMBDA1_MULTIPLIER * root, LAMBDA2_MULTIPLIER * root


def parse_lambda_spec(text):
    """Parse a penalty flag: 'auto', a multiplier 'c<value>', or a number."""
    if isinstance(text, (int, float)):
        return ("fixed", float(text))
    token = str(text).strip().lower()
    if token == "auto":
        return ("auto", None)
    if token.startswith("c"):
        try:
            return ("scale", float(token[1:]))
        except ValueError:
            raise ConfigError(f"bad penalty multiplier {text!r}; expected like 'c10'") from None
    try:
        return ("fixed", float(token))
    except ValueError:
        raise ConfigError(
            f"bad penalty spec {text!r}; expected 'auto', 'c<mult>' or a number"
        ) from None


def resolve_lambdas(lambda1_spec, lambda2_spec, A, omega):
    """Concrete (lambda1, lambda2) from flag values and the observed graph."""
    kind1, value1 = parse_lambda_spec(lambda1_spec)
    kind2, value2 = parse_lambda_spec(lambda2_spec)
    if kind1 == kind2 == "fixed":
        return value1, value2
    root = np.sqrt(observed_average_degree(A, omega))

    def _one(kind, value, default_mult):
        if kind == "fixed":
            return value
        if kind == "scale":
            return value * root
        return default_mult * root

    return _one(kind1, value1, LAMBDA1_MULTIPLIER), _one(kind2, value2, LAMBDA2_MULTIPLIER)


def default_zero_tol(n):
    """Support tolerance for columns of the sparse estimate.

    The proximal step produces exact zeros, so this only guards against
    floating-point dust."""
    return 1e-10 * np.sqrt(n)


def certificate_norms(L_hat, S_hat, A, omega):
    """Per-node norms || omega_j * (A_j - Lhat_j - Shat_{j,.})_+ ||_2."""
    L_hat = as_square(L_hat, "L_hat")
    S_hat = as_square(S_hat, "S_hat")
    A = as_square(A, "A")
    omega = as_square(omega, "omega")
    C = omega * np.clip(A - L_hat - S_hat.T, 0.0, None)
    return np.sqrt((C * C).sum(axis=0))


def detect_outliers(fit, zero_tol=None, A=None, omega=None):
    """Columns of the sparse estimate with norm above the zero tolerance.

    Passing the observed graph fills in the certificate norms so support and
    certificate can be audited side by side."""
    S = fit.S_hat
    n = S.shape[0]
    if zero_tol is None:
        zero_tol = default_zero_tol(n)
    norms = np.sqrt((S * S).sum(axis=0))
    detected = np.flatnonzero(norms > zero_tol)
    lhs = None
    if A is not None and omega is not None:
        lhs = certificate_norms(fit.L_hat, S, A, omega)
    return OutlierReport(
        detected=detected,
        column_norms=norms,
        certificate_lhs=lhs,
        threshold=fit.config_echo.lambda2 / 2.0,
    )


def kkt_certificate(fit, A, omega, lambda2, tol=0.0):
    """Per-node flags: certificate norm exceeds lambda2/2 (+ tol margin).

    At an exact optimum these flags coincide with the nonzero columns of the
    sparse estimate; finite-tolerance iterates only approximate that, so the
    agreement is audited rather than asserted exactly."""
    lhs = certificate_norms(fit.L_hat, fit.S_hat, A, omega)
    return lhs > lambda2 / 2.0 + tol


def _as_pairs(query_pairs, n):
    pairs = np.asarray(query_pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise InputError(f"query pairs must have shape (m, 2), got {pairs.shape}")
    if pairs.size and not ((0 <= pairs) & (pairs < n)).all():
        raise InputError(f"pair index out of range for n={n}")
    if pairs.size and (pairs[:, 0] == pairs[:, 1]).any():
        raise InputError("diagonal pairs cannot be queried")
    return pairs


def predict_links(fit, query_pairs):
    """Connection-probability scores clamp(Lhat_ij + Shat_ij + Shat_ji, [0, 1])."""
    n = fit.L_hat.shape[0]
    pairs = _as_pairs(query_pairs, n)
    i, j = pairs[:, 0], pairs[:, 1]
    raw = fit.L_hat[i, j] + fit.S_hat[i, j] + fit.S_hat[j, i]
    return Prediction(pairs=pairs, scores=np.clip(raw, 0.0, 1.0))


def baseline_average_degree(A, omega, query_pairs):
    """Constant-score baseline: the observed edge density for every pair."""
    A = as_square(A, "A")
    omega = as_square(omega, "omega")
    total = omega.sum()
    if total == 0:
        raise ConfigError("mask is empty: baseline density is undefined")
    pairs = _as_pairs(query_pairs, A.shape[0])
    density = float((omega * A).sum()) / float(total)
    return Prediction(pairs=pairs, scores=np.full(pairs.shape[0], density))


def spectral_communities(fit, k=2, tol=1e-9, zero_tol=None, max_iter=50000):
    """Community assignment from the low-rank estimate's eigenvectors.

    For k = 2, inliers are labelled by the sign of their coordinate in the
    second eigenvector (the transpose is immaterial: the estimate is
    symmetric); detected outliers get label -1. For k > 2 only the leading k
    eigenvectors are exposed and labels is None. The degenerate flag is set
    when the spectral gap around the k-th eigenvalue is too small for the
    eigenvector to be well defined.
    """
    if k < 2:
        raise InputError(f"k must be at least 2, got {k}")
    L = fit.L_hat
    n = L.shape[0]
    if k > n:
        raise InputError(f"k={k} exceeds the number of nodes n={n}")
    report = detect_outliers(fit, zero_tol=zero_tol)
    n_eig = min(k + 1, n)
    values, vectors = top_eigenpairs(L, n_eig, tol=tol, max_iter=max_iter)

    scale = max(1.0, abs(values[0]))
    gap_before = values[k - 2] - values[k - 1] if k - 2 >= 0 else np.inf
    gap_after = values[k - 1] - values[k] if n_eig > k else np.inf
    degenerate = min(gap_before, gap_after) <= _DEGENERATE_GAP * scale

    labels = None
    if k == 2:
        vec = vectors[:, 1]
        if degenerate:
            # the second eigenvector is basis-dependent here; take the most
            # mean-orthogonal direction of the top eigenplane instead, which
            # is the block contrast when the estimate splits into two blocks
            coef = vectors[:, :2].T @ np.ones(n)
            if np.linalg.norm(coef) > 0.0:
                rot = np.array([-coef[1], coef[0]])
                rot /= np.linalg.norm(rot)
                vec, _ = _fix_sign(vectors[:, :2] @ rot)
        labels = (vec > 0.0).astype(np.int64)
        labels[report.detected] = -1
    return CommunityReport(
        labels=labels,
        outliers=report.detected,
        degenerate=bool(degenerate),
        eigenvectors=vectors[:, :k],
    )
