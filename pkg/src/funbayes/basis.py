"""Projection bases for functional data: pooled principal components and
iterative partial least squares.

Both bases are extracted with the discretization approach: curves are
matrices on a uniform grid, integrals are trapezoidal sums, and the
eigenproblem of the covariance operator is solved through the
quadrature-weighted sample covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError, ParameterError
from .fdata import FunctionalDataset, Grid, _frozen_array

__all__ = ["BasisSystem", "fpca", "fpls", "project", "group_eigenstructure"]


@dataclass(frozen=True)
class BasisSystem:
    """A set of J basis functions on a grid plus extraction metadata.

    ``kind`` is ``"pc"`` (rows are orthonormal eigenfunctions of the pooled
    covariance, ``eigenvalues`` descending) or ``"pls"`` (rows are
    unit-norm weight functions with ``pls_loadings``/``pls_dcoef`` from the
    deflation recursion).  ``mean`` is the pooled mean curve subtracted
    before any projection.  ``truncated`` marks a PLS extraction that
    stopped early on a zero covariance direction.
    """

    kind: str
    grid: Grid
    functions: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray | None = None
    pls_loadings: np.ndarray | None = None
    pls_dcoef: np.ndarray | None = None
    truncated: bool = False

    def __post_init__(self):
        if self.kind not in ("pc", "pls"):
            raise ParameterError(f"unknown basis kind {self.kind!r}")
        object.__setattr__(self, "functions", _frozen_array(self.functions))
        object.__setattr__(self, "mean", _frozen_array(self.mean))
        if self.functions.ndim != 2 or self.functions.shape[1] != self.grid.n_points:
            raise DimensionError("basis functions must be J x m on the grid")
        if self.mean.shape != (self.grid.n_points,):
            raise DimensionError("mean curve must match the grid")
        for name in ("eigenvalues", "pls_loadings", "pls_dcoef"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, _frozen_array(val))

    @property
    def n_components(self) -> int:
        return self.functions.shape[0]


def _sign_fix(functions: np.ndarray) -> np.ndarray:
    """Flip rows so the entry of largest magnitude is positive (first index wins ties)."""
    out = np.array(functions)
    for row in out:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return out


def fpca(dataset: FunctionalDataset, n_components: int) -> BasisSystem:
    """Top eigenfunctions of the pooled sample covariance operator.

    Curves are centered at the pooled mean (not the group means), so the
    covariance includes the between-group mean term.  Eigenfunctions are
    orthonormal in L2 under the grid quadrature, with a deterministic sign
    convention.
    """
    n, m = dataset.curves.shape
    if not 1 <= n_components <= min(n - 1, m):
        raise ParameterError(
            f"n_components must be in 1..min(n-1, m) = {min(n - 1, m)}, got {n_components}"
        )
    mean = dataset.curves.mean(axis=0)
    centered = dataset.curves - mean
    sqrt_w = np.sqrt(dataset.grid.quad_weights)
    try:
        _, sv, vt = np.linalg.svd(centered * sqrt_w / np.sqrt(n - 1), full_matrices=False)
    except np.linalg.LinAlgError as exc:
        scale = float(np.abs(centered).max())
        raise NumericalError(
            f"covariance eigendecomposition failed (n={n}, m={m}, max|x|={scale:.3g})"
        ) from exc
    eigenvalues = sv[:n_components] ** 2
    functions = _sign_fix(vt[:n_components] / sqrt_w)
    return BasisSystem("pc", dataset.grid, functions, mean, eigenvalues=eigenvalues)


def fpls(dataset: FunctionalDataset, n_components: int) -> BasisSystem:
    """Partial least squares basis by iterative deflation.

    The response is the (possibly multiclass) integer label centered at its
    mean.  Each step takes the unit-norm weight function proportional to
    sum_i Y_i X_i of the current residuals, scores curves against it, then
    deflates both blocks by the rank-one regression fit.  Extraction stops
    early (``truncated=True``) if the covariance direction vanishes.
    """
    n, m = dataset.curves.shape
    if not 1 <= n_components <= n - 1:
        raise ParameterError(f"n_components must be in 1..n-1 = {n - 1}, got {n_components}")
    w = dataset.grid.quad_weights
    mean = dataset.curves.mean(axis=0)
    x = dataset.curves - mean
    y = dataset.labels.astype(float)
    y = y - y.mean()

    weights, loadings, dcoef = [], [], []
    truncated = False
    norm_scale = None
    for _ in range(n_components):
        u = y @ x
        norm_sq = float(u @ (w * u))
        if norm_scale is None:
            norm_scale = norm_sq
        if norm_sq <= 1e-24 * norm_scale:  # covariance direction numerically gone
            truncated = True
            break
        wfun = u / np.sqrt(norm_sq)
        s = x @ (w * wfun)
        ss = float(s @ s)
        if ss <= 0.0:
            truncated = True
            break
        p = (s @ x) / ss
        d = float(s @ y) / ss
        x = x - np.outer(s, p)
        y = y - d * s
        weights.append(wfun)
        loadings.append(p)
        dcoef.append(d)

    j = len(weights)
    return BasisSystem(
        "pls",
        dataset.grid,
        np.array(weights).reshape(j, m),
        mean,
        pls_loadings=np.array(loadings).reshape(j, m),
        pls_dcoef=np.array(dcoef),
        truncated=truncated,
    )


def project(data, basis: BasisSystem) -> np.ndarray:
    """Project curves onto a basis, returning the n x J score matrix.

    ``data`` is a :class:`FunctionalDataset` (grid checked) or a raw curve
    matrix assumed to live on the basis grid.  PC scores are plain
    quadrature inner products of pooled-mean-centered curves with the
    eigenfunctions.  PLS scores replay the training deflation: score
    against the weight, subtract the loading, repeat.
    """
    if isinstance(data, FunctionalDataset):
        if not data.grid.matches(basis.grid):
            raise DimensionError("dataset grid does not match basis grid")
        curves = data.curves
    else:
        curves = np.atleast_2d(np.asarray(data, dtype=float))
        if curves.shape[1] != basis.grid.n_points:
            raise DimensionError(
                f"curves of length {curves.shape[1]} do not match grid of {basis.grid.n_points} points"
            )
    x = curves - basis.mean
    w = basis.grid.quad_weights
    if basis.kind == "pc":
        return x @ (w * basis.functions).T
    scores = np.empty((x.shape[0], basis.n_components))
    x = np.array(x)
    for j in range(basis.n_components):
        s = x @ (w * basis.functions[j])
        scores[:, j] = s
        x -= np.outer(s, basis.pls_loadings[j])
    return scores


def group_eigenstructure(dataset: FunctionalDataset, n_components: int) -> list[BasisSystem]:
    """FPCA run separately on each group's own curves (centered at the group mean)."""
    out = []
    for k in range(dataset.n_groups):
        curves = dataset.group_curves(k)
        if n_components > min(curves.shape[0] - 1, curves.shape[1]):
            raise ParameterError(
                f"group {k} has {curves.shape[0]} curves; cannot extract {n_components} components"
            )
        sub = FunctionalDataset(dataset.grid, curves, np.zeros(curves.shape[0], dtype=int), np.ones(1))
        out.append(fpca(sub, n_components))
    return out
