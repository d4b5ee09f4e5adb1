"""Parametric dependence models for projected scores.

Correlation matrices are estimated from rank statistics (Kendall's tau or
Spearman's rho), mapped to the elliptical-copula scale, repaired to be
positive definite, and wrapped in an immutable :class:`CopulaModel` with a
cached inverse and log-determinant.  Gaussian and Student-t copula log
densities are evaluated in batch; the t tail index is fitted by pseudo
maximum likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri, stdtrit
from scipy.stats import rankdata

from .density import clamp_pseudo
from .errors import DataError, DomainError, NumericalError, ParameterError

__all__ = [
    "CopulaModel",
    "kendall_tau_matrix",
    "spearman_rho_matrix",
    "rank_to_correlation",
    "nearest_pd_repair",
    "gaussian_copula_logdensity",
    "t_copula_logdensity",
    "fit_t_tail",
    "fit_copula",
]

INDEPENDENCE = "independence"
GAUSSIAN = "gaussian"
STUDENT_T = "student_t"
_FAMILIES = (INDEPENDENCE, GAUSSIAN, STUDENT_T)

EIG_FLOOR = 1e-6
NU_MIN, NU_MAX = 2.0, 300.0
_NU_TOL = 1e-3
_NU_GRID = np.geomspace(NU_MIN, NU_MAX, 16)


@dataclass(frozen=True)
class CopulaModel:
    """Fitted copula: family tag, correlation matrix, optional tail index.

    ``corr_inverse`` and ``log_det`` are precomputed at construction so
    density evaluation is pure linear algebra.
    """

    family: str
    corr: np.ndarray
    tail_index: float | None
    corr_inverse: np.ndarray
    log_det: float
    tail_at_boundary: bool = False

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ParameterError(f"unknown copula family {self.family!r}")
        corr = np.asarray(self.corr, dtype=float)
        inv = np.asarray(self.corr_inverse, dtype=float)
        j = corr.shape[0]
        if corr.shape != (j, j) or inv.shape != (j, j):
            raise ParameterError("correlation and inverse must be square JxJ")
        if np.max(np.abs(corr - corr.T)) > 1e-10 or np.max(np.abs(np.diag(corr) - 1.0)) > 1e-10:
            raise DataError("correlation matrix must be symmetric with unit diagonal")
        if np.linalg.eigvalsh(corr)[0] < EIG_FLOOR * (1.0 - 1e-6):
            raise DataError(f"correlation matrix has an eigenvalue below {EIG_FLOOR}")
        if np.max(np.abs(inv @ corr - np.eye(j))) > 1e-8:
            raise NumericalError("cached inverse is inconsistent with the correlation matrix")
        if self.family == STUDENT_T:
            if self.tail_index is None or not (NU_MIN <= self.tail_index <= NU_MAX):
                raise ParameterError(f"tail index must lie in [{NU_MIN}, {NU_MAX}]")
        elif self.tail_index is not None:
            raise ParameterError("tail index is only meaningful for the t family")
        for name, val in (("corr", corr), ("corr_inverse", inv)):
            v = np.ascontiguousarray(val)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def create(
        cls,
        family: str,
        corr: np.ndarray,
        tail_index: float | None = None,
        tail_at_boundary: bool = False,
    ) -> "CopulaModel":
        """Build a model, computing the cached inverse and log-determinant."""
        corr = np.asarray(corr, dtype=float)
        corr = 0.5 * (corr + corr.T)
        try:
            chol = np.linalg.cholesky(corr)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "correlation matrix is not positive definite; run nearest_pd_repair first"
            ) from exc
        log_det = 2.0 * float(np.log(np.diag(chol)).sum())
        ident = np.eye(corr.shape[0])
        inv = np.linalg.solve(corr, ident)
        inv = 0.5 * (inv + inv.T)
        return cls(family, corr, tail_index, inv, log_det, tail_at_boundary)

    @classmethod
    def independence(cls, dim: int) -> "CopulaModel":
        eye = np.eye(dim)
        return cls(INDEPENDENCE, eye, None, eye.copy(), 0.0)

    @property
    def dim(self) -> int:
        return self.corr.shape[0]


def kendall_tau_matrix(scores: np.ndarray) -> np.ndarray:
    """Pairwise Kendall's tau of the score columns.

    Entry (j, j') is (2/(n(n-1))) sum_{i<i'} sign((s_ij - s_i'j)(s_ij' - s_i'j')),
    so tied pairs contribute zero and the diagonal is exactly 1.
    """
    s = np.atleast_2d(np.asarray(scores, dtype=float))
    n, j = s.shape
    if n < 2:
        raise ParameterError("Kendall's tau needs at least 2 observations")
    tau = np.eye(j)
    # sign(x_i - x_i') per column, int8 to keep J matrices of n^2 entries cheap
    cache_all = n * n * j <= 2**28
    signs = [np.sign(s[:, a][:, None] - s[:, a][None, :]).astype(np.int8) for a in range(j)] if cache_all else None
    denom = n * (n - 1)
    for a in range(j):
        sa = signs[a] if cache_all else np.sign(s[:, a][:, None] - s[:, a][None, :]).astype(np.int8)
        for b in range(a + 1, j):
            sb = signs[b] if cache_all else np.sign(s[:, b][:, None] - s[:, b][None, :]).astype(np.int8)
            tau[a, b] = tau[b, a] = float(np.einsum("ij,ij->", sa, sb, dtype=np.int64)) / denom
    return tau


def spearman_rho_matrix(scores: np.ndarray) -> np.ndarray:
    """Pearson correlation of the column ranks (ties get average ranks)."""
    s = np.atleast_2d(np.asarray(scores, dtype=float))
    n, j = s.shape
    if n < 2:
        raise ParameterError("Spearman's rho needs at least 2 observations")
    ranks = np.empty_like(s)
    for a in range(j):
        col = s[:, a]
        if col.max() == col.min():
            raise DataError(f"score column {a} is constant; Spearman's rho is undefined")
        ranks[:, a] = rankdata(col)
    rho = np.corrcoef(ranks, rowvar=False)
    rho = np.atleast_2d(rho)
    np.fill_diagonal(rho, 1.0)
    return rho


def rank_to_correlation(rank_matrix: np.ndarray, which: str, target_family: str | None = None) -> np.ndarray:
    """Map a rank-correlation matrix to the elliptical-copula correlation scale.

    ``which`` is ``"tau"`` (sin(pi/2 tau)) or ``"spearman"`` (2 sin(pi/6 rho)).
    Only the tau route is valid when the target is a t-copula.
    """
    m = np.asarray(rank_matrix, dtype=float)
    if np.any(np.abs(m) > 1.0 + 1e-12):
        raise ParameterError("rank correlations must lie in [-1, 1]")
    m = np.clip(m, -1.0, 1.0)
    if which == "tau":
        out = np.sin(0.5 * np.pi * m)
    elif which == "spearman":
        if target_family == STUDENT_T:
            raise ParameterError("the Spearman route is not valid for t-copula correlations")
        out = 2.0 * np.sin(np.pi * m / 6.0)
    else:
        raise ParameterError(f"unknown rank method {which!r}")
    out = 0.5 * (out + out.T)
    np.fill_diagonal(out, 1.0)
    return out


def nearest_pd_repair(corr: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """Clip eigenvalues below ``floor`` and rescale back to unit diagonal.

    Already-PD input is returned unchanged.  The clip/rescale pair is
    iterated (rescaling can nudge an eigenvalue back below the floor) and
    converges in a couple of passes for rank-correlation matrices.
    """
    a = np.asarray(corr, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError("correlation matrix must be square")
    if np.max(np.abs(a - a.T)) > 1e-8 or np.max(np.abs(np.diag(a) - 1.0)) > 1e-8:
        raise ParameterError("input must be symmetric with unit diagonal")
    if np.linalg.eigvalsh(a)[0] >= floor:
        return corr
    for _ in range(100):
        vals, vecs = np.linalg.eigh(a)
        if vals[0] >= floor * (1.0 - 1e-9):
            break
        a = (vecs * np.maximum(vals, floor)) @ vecs.T
        d = np.sqrt(np.diag(a))
        a = a / np.outer(d, d)
        a = 0.5 * (a + a.T)
        np.fill_diagonal(a, 1.0)
    else:
        raise NumericalError("positive-definite repair did not converge")
    return a


def _check_u(u: np.ndarray, dim: int) -> np.ndarray:
    uu = np.atleast_2d(np.asarray(u, dtype=float))
    if uu.shape[1] != dim:
        raise ParameterError(f"pseudo-observations must have {dim} columns")
    if np.any(uu <= 0.0) or np.any(uu >= 1.0):
        raise DomainError("pseudo-observations must lie strictly inside (0, 1)")
    return uu


def gaussian_copula_logdensity(u, model: CopulaModel) -> float | np.ndarray:
    """Log density of the Gaussian copula at u (one vector or an n x J batch).

    With z = Phi^{-1}(u): -log|Omega|/2 - z'(Omega^{-1} - I)z / 2.
    """
    if model.family not in (GAUSSIAN, INDEPENDENCE):
        raise ParameterError("model family is not Gaussian")
    uu = _check_u(u, model.dim)
    z = ndtri(uu)
    quad = np.einsum("ij,jk,ik->i", z, model.corr_inverse, z) - np.einsum("ij,ij->i", z, z)
    out = -0.5 * model.log_det - 0.5 * quad
    return float(out[0]) if np.asarray(u).ndim == 1 else out


def t_copula_logdensity(u, model: CopulaModel) -> float | np.ndarray:
    """Log density of the Student-t copula at u (one vector or an n x J batch)."""
    if model.family != STUDENT_T:
        raise ParameterError("model family is not Student-t")
    uu = _check_u(u, model.dim)
    return _t_logdensity_core(uu, model.corr_inverse, model.log_det, model.tail_index, model.dim, np.asarray(u).ndim == 1)


def _t_logdensity_core(uu, inv, log_det, nu, dim, squeeze):
    x = stdtrit(nu, uu)
    quad = np.einsum("ij,jk,ik->i", x, inv, x)
    out = (
        gammaln((nu + dim) / 2.0)
        + (dim - 1) * gammaln(nu / 2.0)
        - dim * gammaln((nu + 1) / 2.0)
        - 0.5 * log_det
        - 0.5 * (nu + dim) * np.log1p(quad / nu)
        + 0.5 * (nu + 1) * np.log1p(x * x / nu).sum(axis=1)
    )
    return float(out[0]) if squeeze else out


def fit_t_tail(pseudo_obs: np.ndarray, corr: np.ndarray) -> float:
    """Tail index maximizing the summed t-copula log density on [2, 300].

    A 16-point log-spaced scan brackets the optimum, then golden-section
    search refines it to 1e-3.  A value pinned at 300 effectively says
    "use a Gaussian copula"; boundary optima are returned as the boundary.
    """
    uu = np.atleast_2d(np.asarray(pseudo_obs, dtype=float))
    dim = uu.shape[1]
    corr = np.asarray(corr, dtype=float)
    if corr.shape != (dim, dim):
        raise ParameterError("correlation matrix does not match the pseudo-observations")
    if np.any(uu <= 0.0) or np.any(uu >= 1.0):
        raise DomainError("pseudo-observations must be clamped off the boundary")
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("correlation matrix must be positive definite") from exc
    log_det = 2.0 * float(np.log(np.diag(chol)).sum())
    inv = np.linalg.solve(corr, np.eye(dim))
    # rank-based pseudo-observations repeat heavily: transform unique values only
    vals, flat_idx = np.unique(uu.ravel(), return_inverse=True)
    idx = flat_idx.reshape(uu.shape)
    nu = _maximize_t_likelihood(vals, idx, inv, log_det, dim)
    if nu <= NU_MIN + _NU_TOL:
        return NU_MIN
    if nu >= NU_MAX - _NU_TOL:
        return NU_MAX
    return float(nu)


def _t_nll_unique(nu, u_vals, u_idx, inv, log_det, dim, memo=None):
    """Negative summed t-copula log density; quantiles evaluated on unique u only."""
    if memo is not None and nu in memo:
        xv = memo[nu]
    else:
        xv = stdtrit(nu, u_vals)
        if memo is not None:
            memo[nu] = xv
    x = xv[u_idx]
    quad = ((x @ inv) * x).sum(axis=1)
    n = x.shape[0]
    const = (
        gammaln((nu + dim) / 2.0)
        + (dim - 1) * gammaln(nu / 2.0)
        - dim * gammaln((nu + 1) / 2.0)
        - 0.5 * log_det
    )
    total = (
        n * const
        - 0.5 * (nu + dim) * np.log1p(quad / nu).sum()
        + 0.5 * (nu + 1) * np.log1p(xv * xv / nu)[u_idx].sum()
    )
    return -float(total)


def _maximize_t_likelihood(u_vals, u_idx, inv, log_det, dim, memo=None) -> float:
    """Coarse log-spaced scan of [NU_MIN, NU_MAX] then golden-section refinement."""

    def nll(nu):
        return _t_nll_unique(nu, u_vals, u_idx, inv, log_det, dim, memo)

    grid = _NU_GRID
    values = [nll(g) for g in grid]
    best = int(np.argmin(values))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, len(grid) - 1)]
    if a == b:
        return float(a)
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = nll(c), nll(d)
    while b - a > _NU_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = nll(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = nll(d)
    return float(np.clip(0.5 * (a + b), NU_MIN, NU_MAX))


def _pseudo_observations(scores: np.ndarray) -> np.ndarray:
    """Rank-based pseudo-observations rank/(n+1), clamped off the boundary."""
    s = np.atleast_2d(np.asarray(scores, dtype=float))
    n = s.shape[0]
    u = np.empty_like(s)
    for a in range(s.shape[1]):
        u[:, a] = rankdata(s[:, a], method="max") / (n + 1.0)
    return clamp_pseudo(u, n)


def fit_copula(scores: np.ndarray, family: str, rank_method: str = "tau") -> CopulaModel:
    """Fit a copula to a score matrix: rank correlation, PD repair, optional tail fit."""
    s = np.atleast_2d(np.asarray(scores, dtype=float))
    if family == INDEPENDENCE:
        return CopulaModel.independence(s.shape[1])
    if family not in _FAMILIES:
        raise ParameterError(f"unknown copula family {family!r}")
    if rank_method == "tau":
        rank = kendall_tau_matrix(s)
    elif rank_method == "spearman":
        rank = spearman_rho_matrix(s)
    else:
        raise ParameterError(f"unknown rank method {rank_method!r}")
    corr = nearest_pd_repair(rank_to_correlation(rank, rank_method, target_family=family))
    if family == GAUSSIAN:
        return CopulaModel.create(GAUSSIAN, corr)
    nu = fit_t_tail(_pseudo_observations(s), corr)
    at_boundary = nu <= NU_MIN + _NU_TOL or nu >= NU_MAX - _NU_TOL
    return CopulaModel.create(STUDENT_T, corr, tail_index=nu, tail_at_boundary=at_boundary)
