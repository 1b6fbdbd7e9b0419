"""Single-response partial least squares regression.

The production fitting path runs Golub-Kahan bidiagonalization started from
``X'y`` with full reorthogonalization of both Lanczos vector sequences
("bidiag2stab"); the classical NIPALS iteration ships alongside it as an
independent oracle. Both parametrize the same model

    X = T P' + E,    y = T q + f,    B = W (P'W)^{-1} q,

over mean-centered data: W holds the orthonormal weight vectors, T the
orthogonal score vectors, P the X-loadings and q the y-loadings. Models with
``l`` components nest, so the coefficient vector for any smaller component
count can be recovered from one fit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDesignError,
    DimensionMismatchError,
    InvalidInputError,
    InvalidSpecError,
)

ALGORITHMS = ("bidiag2stab", "nipals")

# Relative underflow tolerance on the bidiagonal coefficients (and on the
# NIPALS weight norm); a smaller value marks numerical rank exhaustion.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class FitOptions:
    max_components: int = 35
    algorithm: str = "bidiag2stab"
    reorthogonalize: bool = True

    def __post_init__(self):
        if self.max_components < 1:
            raise InvalidSpecError(
                f"max_components must be >= 1, got {self.max_components}"
            )
        if self.algorithm not in ALGORITHMS:
            raise InvalidSpecError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )


@dataclass(frozen=True)
class PlsModel:
    """Fitted PLS1 model over mean-centered data.

    Attributes
    ----------
    x_mean : ndarray, shape (m,)
        Column means of the training design matrix.
    y_mean : float
        Mean of the training response.
    W : ndarray, shape (m, l)
        Orthonormal weight vectors.
    P : ndarray, shape (m, l)
        X-loadings.
    q : ndarray, shape (l,)
        y-loadings.
    B : ndarray, shape (m,)
        Regression coefficients for the full component count, equal to
        ``W (P'W)^{-1} q``.
    n_components : int
        Achieved component count ``l`` (may be below the requested maximum
        when the bidiagonal coefficients underflow).
    """

    x_mean: np.ndarray
    y_mean: float
    W: np.ndarray
    P: np.ndarray
    q: np.ndarray
    B: np.ndarray
    n_components: int

    @property
    def n_features(self) -> int:
        return self.x_mean.shape[0]

    def coefficients(self, l: int | None = None) -> np.ndarray:
        """Regression coefficients using the first ``l`` components."""
        if l is None:
            l = self.n_components
        if not 0 <= l <= self.n_components:
            raise InvalidSpecError(
                f"l={l} outside the fitted range 0..{self.n_components}"
            )
        if l == 0:
            return np.zeros(self.n_features)
        return _coefficient_path(self.W, self.P, self.q)[:, l - 1]

    def coefficient_path(self) -> np.ndarray:
        """Matrix whose column ``l-1`` is the coefficient vector with ``l``
        components, for l = 1..n_components."""
        return _coefficient_path(self.W, self.P, self.q)

    def rotations(self, l: int | None = None) -> np.ndarray:
        """Projection matrix R with scores T = (X - x_mean) R."""
        if l is None:
            l = self.n_components
        if not 1 <= l <= self.n_components:
            raise InvalidSpecError(
                f"l={l} outside the fitted range 1..{self.n_components}"
            )
        PtW = self.P[:, :l].T @ self.W[:, :l]
        return self.W[:, :l] @ np.linalg.inv(PtW)


def _coefficient_path(W: np.ndarray, P: np.ndarray, q: np.ndarray) -> np.ndarray:
    l_max = W.shape[1]
    path = np.zeros((W.shape[0], l_max))
    if l_max == 0:
        return path
    PtW = P.T @ W
    for l in range(1, l_max + 1):
        z = np.linalg.solve(PtW[:l, :l], q[:l])
        path[:, l - 1] = W[:, :l] @ z
    return path


def _check_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError("X must be 2-dimensional")
    if y.ndim != 1:
        raise InvalidInputError("y must be 1-dimensional")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
        )
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 rows to fit")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise InvalidInputError("X and y must be finite")
    return X, y


def _orthogonalize(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    # two classical Gram-Schmidt passes against the whole basis
    for _ in range(2):
        for b in basis:
            v = v - (b @ v) * b
    return v


def _fit_bidiag2stab(Xc, yc, l_max, reorthogonalize):
    """Golub-Kahan bidiagonalization of centered X started from X'y.

    Right vectors v_k are the PLS weight vectors, left vectors u_k the
    normalized scores; rho_k (diagonal) and theta_k (superdiagonal) form
    the bidiagonal matrix. Both sequences are reorthogonalized against all
    of their predecessors every step.
    """
    vs: list[np.ndarray] = []
    us: list[np.ndarray] = []
    rhos: list[float] = []

    v = Xc.T @ yc
    theta_1 = np.linalg.norm(v)
    if theta_1 == 0.0:
        return vs, us, rhos  # centered response orthogonal to X: 0 components
    v = v / theta_1
    u = Xc @ v
    rho = np.linalg.norm(u)
    if rho == 0.0:
        return vs, us, rhos
    rho_1 = rho
    u = u / rho
    vs.append(v)
    us.append(u)
    rhos.append(rho)

    for _ in range(1, l_max):
        v = Xc.T @ us[-1] - rhos[-1] * vs[-1]
        if reorthogonalize:
            v = _orthogonalize(v, vs)
        theta = np.linalg.norm(v)
        if theta < RANK_TOL * theta_1:
            break
        v = v / theta
        u = Xc @ v - theta * us[-1]
        if reorthogonalize:
            u = _orthogonalize(u, us)
        rho = np.linalg.norm(u)
        if rho < RANK_TOL * rho_1:
            break
        u = u / rho
        vs.append(v)
        us.append(u)
        rhos.append(rho)
    return vs, us, rhos


def _fit_nipals(Xc, yc, l_max):
    """Classical NIPALS for a single response: weight from the deflated
    cross-covariance, rank-one deflation of X per component."""
    ws: list[np.ndarray] = []
    ts: list[np.ndarray] = []
    Xd = Xc.copy()
    norm_1 = np.linalg.norm(Xc.T @ yc)
    if norm_1 == 0.0:
        return ws, ts, np.zeros((Xc.shape[1], 0)), np.zeros(0)
    ps = []
    qs = []
    for _ in range(l_max):
        w = Xd.T @ yc
        norm_w = np.linalg.norm(w)
        if norm_w < RANK_TOL * norm_1:
            break
        w = w / norm_w
        t = Xd @ w
        tt = t @ t
        if tt == 0.0:
            break
        p = Xd.T @ t / tt
        q = (yc @ t) / tt
        Xd -= np.outer(t, p)
        ws.append(w)
        ts.append(t)
        ps.append(p)
        qs.append(q)
    if not ws:
        return ws, ts, np.zeros((Xc.shape[1], 0)), np.zeros(0)
    return ws, ts, np.column_stack(ps), np.asarray(qs)


def _apply_sign_convention(W, P, q):
    # make the first non-negligible entry of each weight column positive
    for k in range(W.shape[1]):
        col = W[:, k]
        scale = np.abs(col).max()
        if scale == 0.0:
            continue
        idx = np.flatnonzero(np.abs(col) > RANK_TOL * scale)[0]
        if col[idx] < 0:
            W[:, k] = -W[:, k]
            P[:, k] = -P[:, k]
            q[k] = -q[k]
    return W, P, q


def fit(X, y, opts: FitOptions = FitOptions()) -> PlsModel:
    """Fit a PLS1 model on mean-centered ``X`` and ``y``.

    The requested ``max_components`` must not exceed ``min(n - 1, m)``; the
    achieved count can be lower when a bidiagonal coefficient (or NIPALS
    weight norm) underflows below ``1e-12`` of its initial value. A constant
    response yields a valid zero-component model whose predictions are the
    response mean.
    """
    X, y = _check_xy(X, y)
    n, m = X.shape
    capacity = min(n - 1, m)
    if opts.max_components > capacity:
        raise InvalidSpecError(
            f"max_components={opts.max_components} exceeds min(n-1, m)={capacity}"
        )

    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean
    if np.abs(Xc).max() == 0.0:
        raise DegenerateDesignError("every column of X is constant")

    if opts.algorithm == "bidiag2stab":
        vs, us, rhos = _fit_bidiag2stab(Xc, yc, opts.max_components,
                                        opts.reorthogonalize)
        if vs:
            W = np.column_stack(vs)
            U = np.column_stack(us)
            rho = np.asarray(rhos)
            # loadings of the scores t_k = rho_k u_k
            P = (Xc.T @ U) / rho
            q = (yc @ U) / rho
        else:
            W = np.zeros((m, 0))
            P = np.zeros((m, 0))
            q = np.zeros(0)
    else:
        ws, _, P, q = _fit_nipals(Xc, yc, opts.max_components)
        W = np.column_stack(ws) if ws else np.zeros((m, 0))
        if W.shape[1] == 0:
            P = np.zeros((m, 0))
            q = np.zeros(0)

    W, P, q = _apply_sign_convention(W, P, q)
    l = W.shape[1]
    B = _coefficient_path(W, P, q)[:, l - 1] if l else np.zeros(m)
    return PlsModel(
        x_mean=x_mean, y_mean=y_mean, W=W, P=P, q=q, B=B, n_components=l
    )


def predict(model: PlsModel, X, l: int | None = None) -> np.ndarray:
    """Predicted responses ``(x - x_mean) . B_l + y_mean``."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"expected {model.n_features} columns, got {X.shape[1] if X.ndim == 2 else X.shape}"
        )
    B = model.B if l is None else model.coefficients(l)
    return (X - model.x_mean) @ B + model.y_mean


def scores(model: PlsModel, X, l: int | None = None) -> np.ndarray:
    """Latent coordinates T of the given rows (training scores are
    orthogonal by construction)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatchError(
            f"expected {model.n_features} columns, got {X.shape[1] if X.ndim == 2 else X.shape}"
        )
    return (X - model.x_mean) @ model.rotations(l)
