"""Functional classifiers on projected scores.

Five Bayes classifiers (independence, Gaussian copula, t copula, each on
PC or PLS scores), the functional centroid rule, Fisher discriminant
analysis on PLS scores, and logistic regression on PC scores.  The
truncation level J can be fixed or selected by stratified k-fold cross
validation with the basis refit inside every fold.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtri, stdtrit
from scipy.stats import rankdata

from . import copula as cop
from .basis import BasisSystem, fpca, fpls, project
from .density import MarginalEstimate, clamp_pseudo, kde_logdensity
from .errors import DataError, DimensionError, NumericalError, ParameterError
from .fdata import FunctionalDataset, center_by_group, inner_product

__all__ = [
    "Method",
    "CVRange",
    "ClassifierSpec",
    "TrainedBayesModel",
    "CentroidModel",
    "PLSDAModel",
    "LogisticModel",
    "CVResult",
    "train",
    "predict",
    "classify",
    "log_posteriors",
    "log_posterior_ratios",
    "centroid_score",
    "stratified_folds",
    "select_J_cv",
    "select_classifier_cv",
]

COEF_CAP = 30.0


class Method(str, Enum):
    BC = "bc"
    BCG = "bcg"
    BCG_PLS = "bcg-pls"
    BCT = "bct"
    BCT_PLS = "bct-pls"
    CEN = "cen"
    PLSDA = "plsda"
    LOGISTIC = "logistic"


COPULA_METHODS = frozenset({Method.BCG, Method.BCG_PLS, Method.BCT, Method.BCT_PLS})
BAYES_METHODS = COPULA_METHODS | {Method.BC}
PLS_BASIS_METHODS = frozenset({Method.BCG_PLS, Method.BCT_PLS, Method.PLSDA})

_FAMILY = {
    Method.BC: cop.INDEPENDENCE,
    Method.BCG: cop.GAUSSIAN,
    Method.BCG_PLS: cop.GAUSSIAN,
    Method.BCT: cop.STUDENT_T,
    Method.BCT_PLS: cop.STUDENT_T,
}


@dataclass(frozen=True)
class CVRange:
    """Inclusive candidate range for cross-validated selection of J."""

    lo: int
    hi: int

    def __post_init__(self):
        if not (1 <= self.lo <= self.hi):
            raise ParameterError("CVRange needs 1 <= lo <= hi")


@dataclass(frozen=True)
class ClassifierSpec:
    """Method tag plus truncation level (fixed int or CVRange) and CV settings."""

    method: Method
    J: int | CVRange
    rank_method: str = "tau"
    folds: int = 10

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.rank_method not in ("tau", "spearman"):
            raise ParameterError(f"unknown rank method {self.rank_method!r}")
        if self.folds < 2:
            raise ParameterError("need at least 2 CV folds")
        min_j = 2 if self.method in COPULA_METHODS else 1
        lo = self.J.lo if isinstance(self.J, CVRange) else self.J
        if lo < min_j:
            raise ParameterError(f"{self.method.value} requires J >= {min_j}")

    @property
    def uses_pls(self) -> bool:
        return self.method in PLS_BASIS_METHODS


# ---------------------------------------------------------------------------
# trained models


@dataclass(frozen=True)
class TrainedBayesModel:
    """Per-group marginal KDEs and copula on a shared projection basis."""

    method: Method
    basis: BasisSystem
    priors: np.ndarray
    marginals: tuple  # K groups, each a tuple of J MarginalEstimate
    copulas: tuple  # K CopulaModel

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=float)
        if abs(priors.sum() - 1.0) > 1e-12:
            raise DataError("priors must sum to 1")
        j = self.basis.n_components
        for group in self.marginals:
            if len(group) != j:
                raise DimensionError("every group needs one marginal per basis function")
        for model in self.copulas:
            if model.dim != j:
                raise DimensionError("copula dimension must equal the basis size")
        object.__setattr__(self, "priors", priors)

    @property
    def n_groups(self) -> int:
        return self.priors.size

    @property
    def n_components(self) -> int:
        return self.basis.n_components


@dataclass(frozen=True)
class CentroidModel:
    """Functional centroid classifier: threshold on the discriminant curve psi."""

    grid: object
    psi: np.ndarray
    proj_mean0: float
    proj_mean1: float
    n_components: int


@dataclass(frozen=True)
class PLSDAModel:
    """Fisher's linear discriminant rule on PLS scores."""

    basis: BasisSystem
    class_means: np.ndarray  # K x J
    cov_inverse: np.ndarray  # pooled within-class covariance inverse
    priors: np.ndarray
    ridged: bool = False

    @property
    def n_components(self) -> int:
        return self.basis.n_components


@dataclass(frozen=True)
class LogisticModel:
    """(Multinomial) logistic regression on PC scores, class 0 as reference."""

    basis: BasisSystem
    coef: np.ndarray  # (K-1) x (J+1), column 0 is the intercept
    capped: bool = False
    converged: bool = True

    @property
    def n_components(self) -> int:
        return self.basis.n_components


# ---------------------------------------------------------------------------
# training


def _fit_basis(spec: ClassifierSpec, dataset: FunctionalDataset, n_components: int) -> BasisSystem:
    if spec.uses_pls:
        return fpls(dataset, n_components)
    return fpca(dataset, n_components)


def _train_bayes(spec: ClassifierSpec, dataset: FunctionalDataset, n_components: int) -> TrainedBayesModel:
    family = _FAMILY[spec.method]
    basis = _fit_basis(spec, dataset, n_components)
    j = basis.n_components
    if j == 0:
        raise ParameterError("PLS extraction truncated at 0 components; labels carry no signal")
    counts = np.bincount(dataset.labels, minlength=dataset.n_groups)
    if family != cop.INDEPENDENCE and np.any(counts < j + 1):
        raise ParameterError(
            f"smallest group has {counts.min()} curves; copula fit at J={j} needs "
            f"at least J+1 -- choose a smaller J"
        )
    scores = project(dataset, basis)
    marginals, copulas = [], []
    for k in range(dataset.n_groups):
        sk = scores[dataset.labels == k]
        marginals.append(tuple(MarginalEstimate.fit(sk[:, a]) for a in range(j)))
        copulas.append(cop.fit_copula(sk, family, spec.rank_method))
    return TrainedBayesModel(
        spec.method, basis, counts / counts.sum(), tuple(marginals), tuple(copulas)
    )


def _train_centroid(dataset: FunctionalDataset, n_components: int) -> CentroidModel:
    if dataset.n_groups != 2:
        raise ParameterError("the centroid classifier is binary only")
    basis = fpca(dataset, n_components)
    _, means = center_by_group(dataset)
    mu_d = means[1] - means[0]
    w = dataset.grid.quad_weights
    mu_scores = basis.functions @ (w * mu_d)
    if np.any(basis.eigenvalues <= 0):
        raise ParameterError("zero eigenvalue inside the requested J; choose a smaller J")
    psi = (mu_scores / basis.eigenvalues) @ basis.functions
    return CentroidModel(
        dataset.grid,
        psi,
        inner_product(means[0], psi, dataset.grid),
        inner_product(means[1], psi, dataset.grid),
        n_components,
    )


def _pooled_within_cov(scores: np.ndarray, labels: np.ndarray, k: int):
    n, j = scores.shape
    means = np.empty((k, j))
    scatter = np.zeros((j, j))
    for g in range(k):
        sk = scores[labels == g]
        means[g] = sk.mean(axis=0)
        d = sk - means[g]
        scatter += d.T @ d
    return means, scatter / (n - k)


def _train_plsda(spec: ClassifierSpec, dataset: FunctionalDataset, n_components: int) -> PLSDAModel:
    basis = fpls(dataset, n_components)
    if basis.n_components == 0:
        raise ParameterError("PLS extraction truncated at 0 components; labels carry no signal")
    scores = project(dataset, basis)
    k = dataset.n_groups
    means, cov = _pooled_within_cov(scores, dataset.labels, k)
    cov, ridged = _ensure_invertible(cov)
    counts = np.bincount(dataset.labels, minlength=k)
    return PLSDAModel(basis, means, np.linalg.inv(cov), counts / counts.sum(), ridged)


def _ensure_invertible(cov: np.ndarray):
    try:
        np.linalg.cholesky(cov)
        return cov, False
    except np.linalg.LinAlgError:
        jitter = 1e-8 * np.trace(cov) / cov.shape[0]
        return cov + jitter * np.eye(cov.shape[0]), True


def _fit_multinomial(x: np.ndarray, labels: np.ndarray, k: int):
    """Newton (IRLS) fit of multinomial logistic regression, class 0 as reference.

    Coefficients are capped at magnitude 30 to keep separated data finite.
    Returns (coef, capped, converged).
    """
    n, p = x.shape
    onehot = np.zeros((n, k - 1))
    for c in range(1, k):
        onehot[labels == c, c - 1] = 1.0
    beta = np.zeros((k - 1, p))
    converged = False
    for _ in range(100):
        eta = x @ beta.T
        eta = np.clip(eta, -500, 500)
        expo = np.exp(eta)
        denom = 1.0 + expo.sum(axis=1)
        prob = expo / denom[:, None]  # n x (k-1)
        grad = ((prob - onehot).T @ x).ravel()
        dim = (k - 1) * p
        hess = np.empty((dim, dim))
        for c in range(k - 1):
            for d in range(c, k - 1):
                wgt = prob[:, c] * ((c == d) - prob[:, d])
                block = x.T @ (wgt[:, None] * x)
                hess[c * p : (c + 1) * p, d * p : (d + 1) * p] = block
                hess[d * p : (d + 1) * p, c * p : (c + 1) * p] = block.T
        hess[np.diag_indices_from(hess)] += 1e-10
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        new = np.clip(beta - step.reshape(k - 1, p), -COEF_CAP, COEF_CAP)
        if not np.all(np.isfinite(new)):
            break
        delta = np.max(np.abs(new - beta))
        beta = new
        if delta < 1e-8:
            converged = True
            break
    capped = bool(np.any(np.abs(beta) >= COEF_CAP))
    return beta, capped, converged


def _train_logistic(dataset: FunctionalDataset, n_components: int) -> LogisticModel:
    basis = fpca(dataset, n_components)
    scores = project(dataset, basis)
    x = np.column_stack([np.ones(scores.shape[0]), scores])
    coef, capped, converged = _fit_multinomial(x, dataset.labels, dataset.n_groups)
    return LogisticModel(basis, coef, capped, converged)


def _train_at(spec: ClassifierSpec, dataset: FunctionalDataset, n_components: int):
    if spec.method in BAYES_METHODS:
        return _train_bayes(spec, dataset, n_components)
    if spec.method is Method.CEN:
        return _train_centroid(dataset, n_components)
    if spec.method is Method.PLSDA:
        return _train_plsda(spec, dataset, n_components)
    return _train_logistic(dataset, n_components)


def train(spec: ClassifierSpec, dataset: FunctionalDataset, rng=None):
    """Fit the classifier described by ``spec``.

    When ``spec.J`` is a :class:`CVRange` the truncation level is first
    selected by stratified k-fold cross validation (fold shuffling drawn
    from ``rng``; a fixed default generator keeps retraining bit-identical).
    """
    if isinstance(spec.J, CVRange):
        result = select_J_cv(spec, dataset, rng=rng)
        return _train_at(spec, dataset, result.j_star)
    return _train_at(spec, dataset, spec.J)


# ---------------------------------------------------------------------------
# prediction


def _bayes_log_posteriors(model: TrainedBayesModel, scores: np.ndarray) -> np.ndarray:
    n, j = scores.shape
    out = np.empty((n, model.n_groups))
    for k in range(model.n_groups):
        total = np.full(n, np.log(model.priors[k]))
        cmodel = model.copulas[k]
        needs_u = cmodel.family != cop.INDEPENDENCE
        u = np.empty((n, j)) if needs_u else None
        for a in range(j):
            marg = model.marginals[k][a]
            total += kde_logdensity(marg, scores[:, a])
            if needs_u:
                pos = np.searchsorted(marg.sample, scores[:, a], side="right")
                u[:, a] = clamp_pseudo(pos / (marg.n + 1.0), marg.n)
        if needs_u:
            if cmodel.family == cop.GAUSSIAN:
                total += cop.gaussian_copula_logdensity(u, cmodel)
            else:
                total += cop.t_copula_logdensity(u, cmodel)
        out[:, k] = total
    return out


def log_posteriors(model: TrainedBayesModel, curves) -> np.ndarray:
    """n x K matrix of log(prior_k) + log f_k(scores), up to a shared constant."""
    scores = project(curves, model.basis)
    return _bayes_log_posteriors(model, scores)


def log_posterior_ratios(model: TrainedBayesModel, curve: np.ndarray) -> np.ndarray:
    """Length-K vector of per-group log posteriors for a single curve."""
    return log_posteriors(model, np.atleast_2d(np.asarray(curve, dtype=float)))[0]


def centroid_score(model: CentroidModel, curve: np.ndarray) -> float:
    """T(x) = (<x,psi> - <mu1,psi>)^2 - (<x,psi> - <mu0,psi>)^2; group 1 iff T <= 0."""
    s = inner_product(np.asarray(curve, dtype=float), model.psi, model.grid)
    return (s - model.proj_mean1) ** 2 - (s - model.proj_mean0) ** 2


def _centroid_classify(model: CentroidModel, curves: np.ndarray) -> np.ndarray:
    s = np.atleast_2d(curves) @ (model.grid.quad_weights * model.psi)
    t = (s - model.proj_mean1) ** 2 - (s - model.proj_mean0) ** 2
    return (t <= 0).astype(np.int64)


def _plsda_classify(model: PLSDAModel, curves) -> np.ndarray:
    scores = project(curves, model.basis)
    disc = _lda_discriminants(scores, model.class_means, model.cov_inverse, model.priors)
    return np.argmax(disc, axis=1).astype(np.int64)


def _lda_discriminants(scores, means, cov_inv, priors):
    proj = scores @ cov_inv @ means.T
    offset = 0.5 * np.einsum("kj,jl,kl->k", means, cov_inv, means)
    return proj - offset + np.log(priors)


def _logistic_classify(model: LogisticModel, curves) -> np.ndarray:
    scores = project(curves, model.basis)
    x = np.column_stack([np.ones(scores.shape[0]), scores])
    eta = x @ model.coef.T
    full = np.column_stack([np.zeros(eta.shape[0]), eta])
    return np.argmax(full, axis=1).astype(np.int64)


def classify(model: TrainedBayesModel, curves) -> np.ndarray:
    """Bayes decisions: argmax of the per-group log posteriors (ties to the lower label)."""
    return np.argmax(log_posteriors(model, curves), axis=1).astype(np.int64)


def predict(model, curves) -> np.ndarray:
    """Predicted labels for any trained model type."""
    if isinstance(model, TrainedBayesModel):
        return classify(model, curves)
    if isinstance(model, CentroidModel):
        return _centroid_classify(model, np.atleast_2d(np.asarray(curves, dtype=float)))
    if isinstance(model, PLSDAModel):
        return _plsda_classify(model, curves)
    if isinstance(model, LogisticModel):
        return _logistic_classify(model, curves)
    raise ParameterError(f"unknown model type {type(model).__name__}")


# ---------------------------------------------------------------------------
# cross validation


@dataclass(frozen=True)
class CVResult:
    """Selected truncation level and the CV error curve over the candidates."""

    j_star: int
    candidates: np.ndarray
    errors: np.ndarray  # NaN marks candidates infeasible in at least one fold

    @property
    def best_error(self) -> float:
        return float(self.errors[np.flatnonzero(self.candidates == self.j_star)[0]])


def stratified_folds(labels: np.ndarray, n_folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Shuffle each group and deal its members round-robin into the folds.

    Group proportions are preserved as closely as the fold count allows
    (folds up to leave-one-out are supported).  Every fold must leave at
    least 2 training members in each group.
    """
    labels = np.asarray(labels)
    counts = np.bincount(labels)
    if not 2 <= n_folds <= labels.size:
        raise ParameterError(f"fold count must lie in 2..n = {labels.size}")
    folds = [[] for _ in range(n_folds)]
    pos = 0
    for k in range(counts.size):
        idx = rng.permutation(np.flatnonzero(labels == k))
        for i in idx:
            folds[pos % n_folds].append(int(i))
            pos += 1
    out = [np.sort(np.array(f, dtype=np.int64)) for f in folds]
    for f in out:
        held = np.bincount(labels[f], minlength=counts.size)
        if np.any(counts - held < 2):
            raise ParameterError(
                f"{n_folds} folds would leave fewer than 2 training curves in some group"
            )
    return out


def select_J_cv(
    spec: ClassifierSpec,
    dataset: FunctionalDataset,
    rng: np.random.Generator | None = None,
    folds_idx: list[np.ndarray] | None = None,
) -> CVResult:
    """Stratified k-fold CV error for every candidate J; smallest J wins ties.

    The basis, marginals, and copulas are refit inside each fold, so no
    held-out information leaks into the fold's model.  A candidate that is
    infeasible in any fold (e.g. a training group too small for the copula
    fit) is excluded.  Precomputed ``folds_idx`` lets several specs share
    one split.
    """
    if not isinstance(spec.J, CVRange):
        raise ParameterError("select_J_cv needs a spec with a CVRange")
    if folds_idx is None:
        if rng is None:
            rng = np.random.default_rng(0)
        folds_idx = stratified_folds(dataset.labels, spec.folds, rng)
    candidates = np.arange(spec.J.lo, spec.J.hi + 1)
    miss = np.zeros(candidates.size)
    feasible = np.ones(candidates.size, dtype=bool)
    total = 0
    for fold in folds_idx:
        mask = np.ones(dataset.n_curves, dtype=bool)
        mask[fold] = False
        train_ds = dataset.subset(np.flatnonzero(mask))
        test_curves = dataset.curves[fold]
        test_labels = dataset.labels[fold]
        counts, ok = _fold_candidate_errors(spec, train_ds, test_curves, test_labels, candidates)
        miss += np.where(ok, counts, 0.0)
        feasible &= ok
        total += fold.size
    if not feasible.any():
        raise ParameterError("no candidate J is feasible in every fold")
    errors = np.where(feasible, miss / total, np.nan)
    best = int(np.nanargmin(errors))
    return CVResult(int(candidates[best]), candidates, errors)


def select_classifier_cv(
    dataset: FunctionalDataset,
    specs: list[ClassifierSpec],
    rng: np.random.Generator | None = None,
    folds_idx: list[np.ndarray] | None = None,
):
    """Run select_J_cv per spec and pick the lowest CV error (list order breaks ties).

    Returns (best_spec, results) where results maps each spec to its CVResult.
    """
    if not specs:
        raise ParameterError("need at least one classifier spec")
    if folds_idx is None:
        if rng is None:
            rng = np.random.default_rng(0)
        folds = max(spec.folds for spec in specs)
        folds_idx = stratified_folds(dataset.labels, folds, rng)
    results = {}
    best_spec, best_err = None, np.inf
    for spec in specs:
        res = select_J_cv(spec, dataset, folds_idx=folds_idx)
        results[spec] = res
        if res.best_error < best_err:
            best_spec, best_err = spec, res.best_error
    return best_spec, results


# --- per-fold engines ------------------------------------------------------
# Each engine fits once at the largest feasible candidate and reuses the
# nested structure (PC eigenfunctions, PLS components, rank-correlation
# submatrices, cumulative marginal log densities) across candidates.


def _fold_candidate_errors(spec, train_ds, test_curves, test_labels, candidates):
    if spec.method in BAYES_METHODS:
        return _fold_bayes(spec, train_ds, test_curves, test_labels, candidates)
    if spec.method is Method.CEN:
        return _fold_centroid(train_ds, test_curves, test_labels, candidates)
    if spec.method is Method.PLSDA:
        return _fold_plsda(spec, train_ds, test_curves, test_labels, candidates)
    return _fold_logistic(train_ds, test_curves, test_labels, candidates)


def _fold_jmax(spec, train_ds, candidates) -> int:
    n, m = train_ds.curves.shape
    cap = n - 1 if spec.uses_pls else min(n - 1, m)
    if spec.method in COPULA_METHODS:
        cap = min(cap, int(np.bincount(train_ds.labels).min()) - 1)
    return min(int(candidates[-1]), cap)


def _fold_bayes(spec, train_ds, test_curves, test_labels, candidates):
    family = _FAMILY[spec.method]
    jmax = _fold_jmax(spec, train_ds, candidates)
    ok = candidates <= jmax
    counts = np.zeros(candidates.size)
    if jmax < candidates[0]:
        return counts, ok
    basis = _fit_basis(spec, train_ds, jmax)
    if basis.n_components < jmax:
        jmax = basis.n_components
        ok = candidates <= jmax
        if jmax < candidates[0]:
            return counts, ok
    strain = project(train_ds, basis)
    stest = project(test_curves, basis)
    k_groups = train_ds.n_groups
    n_test = test_curves.shape[0]
    log_prior = np.log(np.bincount(train_ds.labels, minlength=k_groups) / train_ds.n_curves)

    cum_logf = np.empty((k_groups, n_test, jmax))
    z_test, u_test, u_train, rank_mat, t_memo = [], [], [], [], []
    for k in range(k_groups):
        sk = strain[train_ds.labels == k]
        nk = sk.shape[0]
        logf = np.empty((n_test, jmax))
        u = np.empty((n_test, jmax))
        for a in range(jmax):
            marg = MarginalEstimate.fit(sk[:, a])
            logf[:, a] = kde_logdensity(marg, stest[:, a])
            pos = np.searchsorted(marg.sample, stest[:, a], side="right")
            u[:, a] = clamp_pseudo(pos / (nk + 1.0), nk)
        cum_logf[k] = np.cumsum(logf, axis=1)
        if family == cop.INDEPENDENCE:
            z_test.append(None)
            u_test.append(None)
            u_train.append(None)
            rank_mat.append(None)
            t_memo.append(None)
            continue
        u_test.append(u)
        z_test.append(ndtri(u))
        if spec.rank_method == "tau":
            rank_mat.append(cop.kendall_tau_matrix(sk))
        else:
            rank_mat.append(cop.spearman_rho_matrix(sk))
        if family == cop.STUDENT_T:
            ut = np.empty((nk, jmax))
            for a in range(jmax):
                ut[:, a] = rankdata(sk[:, a], method="max") / (nk + 1.0)
            uc = clamp_pseudo(ut, nk)
            vals, flat = np.unique(uc.ravel(), return_inverse=True)
            u_train.append((vals, flat.reshape(uc.shape)))
            t_memo.append({})
        else:
            u_train.append(None)
            t_memo.append(None)

    for ci, j in enumerate(candidates):
        if not ok[ci]:
            continue
        lp = log_prior[None, :] + cum_logf[:, :, j - 1].T
        if family != cop.INDEPENDENCE:
            try:
                for k in range(k_groups):
                    corr = cop.nearest_pd_repair(
                        cop.rank_to_correlation(rank_mat[k][:j, :j], spec.rank_method, family)
                    )
                    chol = np.linalg.cholesky(corr)
                    log_det = 2.0 * float(np.log(np.diag(chol)).sum())
                    inv = np.linalg.solve(corr, np.eye(j))
                    if family == cop.GAUSSIAN:
                        z = z_test[k][:, :j]
                        quad = np.einsum("ij,jk,ik->i", z, inv, z) - np.einsum("ij,ij->i", z, z)
                        lp[:, k] += -0.5 * log_det - 0.5 * quad
                    else:
                        vals, idx = u_train[k]
                        nu = cop._maximize_t_likelihood(
                            vals, idx[:, :j], inv, log_det, j, memo=t_memo[k]
                        )
                        lp[:, k] += _t_logdensity_prepared(u_test[k][:, :j], inv, log_det, nu, j)
            except (np.linalg.LinAlgError, NumericalError):
                ok[ci] = False
                continue
        counts[ci] = float(np.sum(np.argmax(lp, axis=1) != test_labels))
    return counts, ok


def _t_logdensity_prepared(u, inv, log_det, nu, dim):
    from scipy.special import gammaln

    x = stdtrit(nu, u)
    quad = ((x @ inv) * x).sum(axis=1)
    return (
        gammaln((nu + dim) / 2.0)
        + (dim - 1) * gammaln(nu / 2.0)
        - dim * gammaln((nu + 1) / 2.0)
        - 0.5 * log_det
        - 0.5 * (nu + dim) * np.log1p(quad / nu)
        + 0.5 * (nu + 1) * np.log1p(x * x / nu).sum(axis=1)
    )


def _fold_centroid(train_ds, test_curves, test_labels, candidates):
    if train_ds.n_groups != 2:
        raise ParameterError("the centroid classifier is binary only")
    jmax = min(int(candidates[-1]), train_ds.n_curves - 1, train_ds.grid.n_points)
    ok = candidates <= jmax
    counts = np.zeros(candidates.size)
    if jmax < candidates[0]:
        return counts, ok
    basis = fpca(train_ds, jmax)
    ok &= candidates <= int(np.sum(basis.eigenvalues > 0))
    _, means = center_by_group(train_ds)
    w = train_ds.grid.quad_weights
    mu_scores = basis.functions @ (w * (means[1] - means[0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(basis.eigenvalues > 0, mu_scores / basis.eigenvalues, 0.0)
    stest = project(test_curves, basis)
    smean = project(means, basis)
    proj_x = np.cumsum(stest * coef, axis=1)  # <x, psi_J> for every J, up to centering
    proj_m = np.cumsum(smean * coef, axis=1)
    for ci, j in enumerate(candidates):
        if not ok[ci]:
            continue
        t = (proj_x[:, j - 1] - proj_m[1, j - 1]) ** 2 - (proj_x[:, j - 1] - proj_m[0, j - 1]) ** 2
        counts[ci] = float(np.sum((t <= 0).astype(np.int64) != test_labels))
    return counts, ok


def _fold_plsda(spec, train_ds, test_curves, test_labels, candidates):
    jmax = _fold_jmax(spec, train_ds, candidates)
    ok = candidates <= jmax
    counts = np.zeros(candidates.size)
    if jmax < candidates[0]:
        return counts, ok
    basis = fpls(train_ds, jmax)
    if basis.n_components < jmax:
        jmax = basis.n_components
        ok = candidates <= jmax
        if jmax < candidates[0]:
            return counts, ok
    strain = project(train_ds, basis)
    stest = project(test_curves, basis)
    k = train_ds.n_groups
    priors = np.bincount(train_ds.labels, minlength=k) / train_ds.n_curves
    means = np.empty((k, jmax))
    scatter = np.zeros((jmax, jmax))
    for g in range(k):
        sk = strain[train_ds.labels == g]
        means[g] = sk.mean(axis=0)
        d = sk - means[g]
        scatter += d.T @ d
    for ci, j in enumerate(candidates):
        if not ok[ci]:
            continue
        cov, _ = _ensure_invertible(scatter[:j, :j] / (train_ds.n_curves - k))
        disc = _lda_discriminants(stest[:, :j], means[:, :j], np.linalg.inv(cov), priors)
        counts[ci] = float(np.sum(np.argmax(disc, axis=1) != test_labels))
    return counts, ok


def _fold_logistic(train_ds, test_curves, test_labels, candidates):
    n, m = train_ds.curves.shape
    jmax = min(int(candidates[-1]), n - 1, m)
    ok = candidates <= jmax
    counts = np.zeros(candidates.size)
    if jmax < candidates[0]:
        return counts, ok
    basis = fpca(train_ds, jmax)
    strain = project(train_ds, basis)
    stest = project(test_curves, basis)
    k = train_ds.n_groups
    for ci, j in enumerate(candidates):
        if not ok[ci]:
            continue
        x = np.column_stack([np.ones(n), strain[:, :j]])
        coef, _, _ = _fit_multinomial(x, train_ds.labels, k)
        xt = np.column_stack([np.ones(stest.shape[0]), stest[:, :j]])
        eta = np.column_stack([np.zeros(stest.shape[0]), xt @ coef.T])
        counts[ci] = float(np.sum(np.argmax(eta, axis=1) != test_labels))
    return counts, ok
