"""Statistical and optimization kernels shared by all selectors.

Least squares and the F machinery are thin, contract-checked wrappers over
LAPACK (via numpy/scipy); k-means and FastICA are implemented here because
the selectors depend on their exact seeding, repair, and convergence
behaviour being reproducible.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import betainc, gammaincc

from .errors import (
    BadK,
    DegenerateInput,
    NotConvergedWarning,
    RankDeficientWarning,
    Underdetermined,
)


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit. ``beta[0]`` is the intercept when one was added."""

    beta: np.ndarray
    residuals: np.ndarray
    rss: float
    n: int
    k: int
    intercept: bool
    rank: int

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.k

    def predict(self, regressors: np.ndarray) -> float:
        x = np.asarray(regressors, dtype=float).ravel()
        expected = self.k - 1 if self.intercept else self.k
        if x.shape[0] != expected:
            from .errors import ShapeError

            raise ShapeError(f"expected {expected} regressors, got {x.shape[0]}")
        if self.intercept:
            return float(self.beta[0] + self.beta[1:] @ x)
        return float(self.beta @ x)


@dataclass(frozen=True)
class FTestResult:
    statistic: float
    df1: int
    df2: int
    p_value: float


def ols_fit(X: np.ndarray, y: np.ndarray, intercept: bool = True) -> OlsFit:
    """Minimum-norm least squares via SVD.

    Requires strictly more rows than columns. Rank deficiency is not an
    error (macro panels are collinear in practice): the minimum-norm
    solution is returned and a RankDeficientWarning issued.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.shape[0]:
        raise ValueError("rows(X) must equal len(y)")
    A = np.column_stack([np.ones(len(y)), X]) if intercept else X
    n, k = A.shape
    if n <= k:
        raise Underdetermined(f"{n} rows for {k} regressors")
    beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < k:
        warnings.warn(
            f"rank {rank} < {k} columns; minimum-norm solution returned",
            RankDeficientWarning,
            stacklevel=2,
        )
    residuals = y - A @ beta
    return OlsFit(
        beta=beta,
        residuals=residuals,
        rss=float(residuals @ residuals),
        n=n,
        k=k,
        intercept=intercept,
        rank=int(rank),
    )


def f_sf(x: float, df1: int, df2: int) -> float:
    """Upper tail of the F(df1, df2) distribution via the regularized
    incomplete beta function."""
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return float(betainc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x)))


def t_sf(x: float, df: int) -> float:
    """Upper tail of Student's t with ``df`` degrees of freedom."""
    if math.isinf(x):
        return 0.0 if x > 0 else 1.0
    p_two = betainc(df / 2.0, 0.5, df / (df + x * x))
    return float(p_two / 2.0 if x >= 0 else 1.0 - p_two / 2.0)


def chi2_sf(x: float, df: int) -> float:
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def f_test_nested(
    rss_restricted: float, rss_full: float, q: int, n: int, k_full: int
) -> FTestResult:
    """Nested-model F test; negative RSS gaps are clamped to zero.

    A perfect full fit with a worse restricted fit yields an infinite
    statistic and p = 0.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if n <= k_full:
        raise ValueError("need n > k_full")
    if rss_full < 0 or rss_restricted < 0:
        raise ValueError("RSS cannot be negative")
    gap = max(rss_restricted - rss_full, 0.0)
    df2 = n - k_full
    if rss_full == 0.0:
        if gap > 0.0:
            return FTestResult(math.inf, q, df2, 0.0)
        return FTestResult(0.0, q, df2, 1.0)
    stat = (gap / q) / (rss_full / df2)
    return FTestResult(stat, q, df2, f_sf(stat, q, df2))


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or len(x) < 2:
        raise ValueError("need two equal-length vectors of length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("zero-variance input to correlation")
    return float((xc @ yc) / math.sqrt(sx * sy))


def partial_correlation(
    x: np.ndarray, y: np.ndarray, Z: np.ndarray | None = None
) -> tuple[float, float]:
    """Partial correlation of x and y given the columns of Z, with the
    two-sided p-value from the t transform.

    With an empty Z this reduces to the plain Pearson correlation. A
    residual with (numerically) zero variance raises DegenerateInput.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = len(x)
    if Z is None or (hasattr(Z, "size") and np.asarray(Z).size == 0):
        nz = 0
        rx, ry = x, y
    else:
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        nz = Z.shape[1]
        if n <= nz + 2:
            raise Underdetermined(f"{n} rows for {nz} conditioning columns")
        rx = ols_fit(Z, x, intercept=True).residuals
        ry = ols_fit(Z, y, intercept=True).residuals
        # numerically exact dependence on Z leaves only rounding noise
        for resid, orig in ((rx, x), (ry, y)):
            total = float(((orig - orig.mean()) ** 2).sum())
            if float(resid @ resid) <= 1e-24 * max(total, 1e-300):
                raise DegenerateInput("residual is (numerically) a zero vector")
    r = pearson(rx, ry)
    dof = n - nz - 2
    if dof < 1:
        raise ValueError("not enough observations for the t transform")
    r = min(max(r, -1.0), 1.0)
    if abs(r) >= 1.0:
        return r, 0.0
    t = r * math.sqrt(dof / (1.0 - r * r))
    p = 2.0 * t_sf(abs(t), dof)
    return r, min(p, 1.0)


@dataclass(frozen=True)
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    objective_history: tuple[float, ...]


def _kmeanspp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[c] = points[rng.integers(n)]
            continue
        idx = rng.choice(n, p=d2 / total)
        centroids[c] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[c]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    points: np.ndarray, k: int, seed: int = 0, max_iter: int = 300
) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding, deterministic given seed.

    An empty cluster is repaired by handing it the point currently farthest
    from its own centroid, which never increases the objective.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be 2-d (n x features)")
    n = points.shape[0]
    if k > n:
        raise BadK(f"k={k} exceeds {n} points")
    if k < 1:
        raise BadK("k must be >= 1")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(points, k, rng)
    assignments = np.zeros(n, dtype=int)
    history = []
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_assign = d2.argmin(axis=1)  # ties resolve to the lowest index
        for c in range(k):
            if (new_assign == c).any():
                continue
            dist_own = d2[np.arange(n), new_assign]
            donor = int(dist_own.argmax())
            new_assign[donor] = c
            d2[donor, :] = np.inf
            d2[donor, c] = 0.0
        moved = (new_assign != assignments).any() or not history
        assignments = new_assign
        for c in range(k):
            centroids[c] = points[assignments == c].mean(axis=0)
        inertia = float(
            ((points - centroids[assignments]) ** 2).sum()
        )
        history.append(inertia)
        if not moved and len(history) > 1:
            break
    return KMeansResult(assignments, centroids, history[-1], tuple(history))


@dataclass(frozen=True)
class FastIcaResult:
    unmixing: np.ndarray  # components x variables, in the original space
    sources: np.ndarray  # samples x components
    converged: bool
    n_iter: int


def _sym_decorrelate(W: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(W @ W.T)
    vals = np.clip(vals, 1e-12, None)
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.T @ W


def fastica(
    X: np.ndarray,
    n_components: int | None = None,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-5,
) -> FastIcaResult:
    """Symmetric FastICA with tanh contrast on eigen-whitened data.

    Parameters
    ----------
    X : array, samples x variables. Centered internally.
    n_components : number of sources to extract (default: all variables).
    seed : seeds the random orthogonal starting point.
    max_iter, tol : fixed-point iteration cap and the convergence threshold
        on the largest row-direction change.

    Returns the unmixing matrix expressed in the original (centered)
    variable space and the source estimates; sources have identity sample
    covariance by construction. Hitting the iteration cap issues a
    NotConvergedWarning and returns the best iterate.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-d (samples x variables)")
    n, m = X.shape
    if n <= m:
        raise Underdetermined(f"{n} samples for {m} variables")
    c = m if n_components is None else int(n_components)
    if not 1 <= c <= m:
        raise ValueError(f"n_components must be in 1..{m}")
    Xc = X - X.mean(axis=0)
    cov = (Xc.T @ Xc) / (n - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:c]
    vals = vals[order]
    if (vals <= 1e-12).any():
        raise DegenerateInput("covariance is singular; cannot whiten")
    K = vecs[:, order] / np.sqrt(vals)  # variables x components
    Z = Xc @ K  # white: sample cov = I
    rng = np.random.default_rng(seed)
    W = _sym_decorrelate(rng.standard_normal((c, c)))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        U = Z @ W.T
        G = np.tanh(U)
        g_prime = 1.0 - G * G
        W_new = _sym_decorrelate((G.T @ Z) / n - g_prime.mean(axis=0)[:, None] * W)
        delta = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0)))
        W = W_new
        if delta < tol:
            converged = True
            break
    if not converged:
        warnings.warn(
            f"FastICA stopped after {max_iter} iterations", NotConvergedWarning,
            stacklevel=2,
        )
    return FastIcaResult(
        unmixing=W @ K.T,
        sources=Z @ W.T,
        converged=converged,
        n_iter=it,
    )


def acyclicity(S: np.ndarray) -> tuple[float, np.ndarray]:
    """Smooth DAG-ness measure h(S) = tr(exp(S*S)) - d and its gradient.

    h is zero exactly when the support of S admits a topological order;
    the gradient is 2 exp(S*S)^T * S (Hadamard products throughout).
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be square")
    E = expm(S * S)
    h = float(np.trace(E)) - S.shape[0]
    grad = 2.0 * E.T * S
    return max(h, 0.0), grad
