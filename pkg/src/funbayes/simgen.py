"""Synthetic scenario generation and Gaussian-theory diagnostics.

Scenarios follow a four-factor design: group eigenfunctions (same /
Givens-rotated / a third group with a different rotation scale), group
mean difference, eigenvalue sequences, and standardized score
distributions (Gaussian, a skewed tail-dependent ratio, or mixed types
across groups).  Curves are Karhunen-Loeve sums of 201 basis functions
plus white observation noise, sampled on a uniform grid of [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh as scipy_eigh

from .errors import ParameterError
from .fdata import FunctionalDataset, Grid
from .streams import stream

__all__ = [
    "ScenarioConfig",
    "TheoryDiagnostics",
    "fourier_basis",
    "rotate_basis",
    "sample_scores",
    "generate",
    "theory_diagnostics",
    "joint_eigenbasis",
    "oracle_quadratic_log_ratio",
]

SAME, ROTATED, MULTI = "same", "rotated", "multi"
_EXP_RATE = 5.0 * np.sqrt(3.0) / 3.0  # rate of the exponential in the skewed score ratio
_EXP_MEAN = 1.0 / _EXP_RATE

ROTATION_SCALE_GROUP1 = np.pi / 3.0
ROTATION_SCALE_GROUP2 = np.pi / 4.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Factor levels, sample sizes, and seed for one simulation scenario."""

    eigenfunction_factor: str  # same | rotated | multi
    mean_factor: str  # same | different
    eigenvalue_factor: str  # same | different
    score_factor: str  # n | t | v
    n_classes: int = 2
    n_train: int = 100
    n_test: int = 150
    grid_points: int = 51
    j_gen: int = 201
    noise_sd: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.eigenfunction_factor not in (SAME, ROTATED, MULTI):
            raise ParameterError(f"unknown eigenfunction factor {self.eigenfunction_factor!r}")
        if self.mean_factor not in ("same", "different"):
            raise ParameterError(f"unknown mean factor {self.mean_factor!r}")
        if self.eigenvalue_factor not in ("same", "different"):
            raise ParameterError(f"unknown eigenvalue factor {self.eigenvalue_factor!r}")
        if self.score_factor not in ("n", "t", "v"):
            raise ParameterError(f"unknown score factor {self.score_factor!r}")
        if self.n_classes not in (2, 3):
            raise ParameterError("n_classes must be 2 or 3")
        if (self.eigenfunction_factor == MULTI) != (self.n_classes == 3):
            raise ParameterError("the multi eigenfunction factor is exactly the 3-class design")
        if self.n_train < 2 * self.n_classes or self.n_test < self.n_classes:
            raise ParameterError("sample sizes too small for the number of classes")
        if self.grid_points < 3:
            raise ParameterError("need at least 3 grid points")
        if self.j_gen < 1:
            raise ParameterError("j_gen must be positive")

    @property
    def label(self) -> str:
        first = {SAME: "S", ROTATED: "R", MULTI: "M"}[self.eigenfunction_factor]
        return (
            first
            + ("D" if self.mean_factor == "different" else "S")
            + ("D" if self.eigenvalue_factor == "different" else "S")
            + self.score_factor.upper()
        )

    @classmethod
    def from_label(cls, label: str, **kwargs) -> "ScenarioConfig":
        """Parse a four-letter code like RSDN or MDSN into a config."""
        code = label.strip().upper()
        if len(code) != 4 or code[0] not in "RSM" or code[1] not in "SD" or code[2] not in "SD" or code[3] not in "NTV":
            raise ParameterError(
                f"unknown scenario label {label!r}; expected [R|S|M][S|D][S|D][N|T|V]"
            )
        first = {"S": SAME, "R": ROTATED, "M": MULTI}[code[0]]
        kwargs.setdefault("n_classes", 3 if code[0] == "M" else 2)
        return cls(
            first,
            "different" if code[1] == "D" else "same",
            "different" if code[2] == "D" else "same",
            code[3].lower(),
            **kwargs,
        )


def fourier_basis(grid_points: np.ndarray, n_functions: int) -> np.ndarray:
    """Fourier system on [0, 1]: row 1 is the constant 1, then
    sqrt(2)cos(j pi t) for even j and sqrt(2)sin((j-1) pi t) for odd j > 1."""
    t = np.asarray(grid_points, dtype=float)
    out = np.empty((n_functions, t.size))
    out[0] = 1.0
    for j in range(2, n_functions + 1):
        if j % 2 == 0:
            out[j - 1] = np.sqrt(2.0) * np.cos(j * np.pi * t)
        else:
            out[j - 1] = np.sqrt(2.0) * np.sin((j - 1) * np.pi * t)
    return out


def rotate_basis(basis: np.ndarray, eigenvalues: np.ndarray, angle_scale: float) -> np.ndarray:
    """Iterated Givens rotations of basis rows.

    For pairs (j, j') with 1 <= j <= J-1 and j' = j+1..J, in that order,
    rows j and j' are rotated by angle_scale * (lambda_j + lambda_j'),
    where lambda are the reference group's eigenvalues.  Leading functions
    therefore receive the largest rotations.
    """
    basis = np.array(basis, dtype=float)
    lam = np.asarray(eigenvalues, dtype=float)
    j_total = basis.shape[0]
    if lam.size != j_total:
        raise ParameterError("eigenvalues must match the number of basis rows")
    for j in range(j_total - 1):
        for jp in range(j + 1, j_total):
            theta = angle_scale * (lam[j] + lam[jp])
            c, s = np.cos(theta), np.sin(theta)
            row_j = basis[j].copy()
            basis[j] = c * row_j - s * basis[jp]
            basis[jp] = s * row_j + c * basis[jp]
    return basis


def _scores_n(rng, n, j):
    return rng.standard_normal((n, j))


def _scores_t(rng, n, j):
    delta = rng.exponential(scale=_EXP_MEAN, size=(n, j))
    eta = rng.chisquare(5, size=n) / 5.0
    return (delta - _EXP_MEAN) / eta[:, None]


def _scores_exp(rng, n, j):
    return rng.exponential(scale=1.0, size=(n, j)) - 1.0


def sample_scores(factor: str, group: int, n: int, j: int, rng, n_classes: int = 2) -> np.ndarray:
    """Standardized score draws for one group; rows are independent curves.

    The "t" factor shares one chi-square denominator within each row, so
    scores on different basis functions are uncorrelated but dependent.
    The "v" factor varies the distribution type across groups.
    """
    if factor == "n":
        return _scores_n(rng, n, j)
    if factor == "t":
        return _scores_t(rng, n, j)
    if factor == "v":
        if n_classes == 2:
            return _scores_n(rng, n, j) if group == 1 else _scores_exp(rng, n, j)
        return (_scores_n, _scores_exp, _scores_t)[group](rng, n, j)
    raise ParameterError(f"unknown score factor {factor!r}")


def _group_eigenvalues(config: ScenarioConfig) -> np.ndarray:
    j = np.arange(1, config.j_gen + 1, dtype=float)
    if config.n_classes == 2:
        base = 1.0 / j**2
        if config.eigenvalue_factor == "different":
            return np.stack([base, 1.0 / j**3])
        return np.stack([base, base])
    base = 10.0 / j**2
    if config.eigenvalue_factor == "different":
        return np.stack([base, 10.0 / j**3, 10.0 / j])
    return np.stack([base, base, base])


def _group_bases(config: ScenarioConfig, grid_points: np.ndarray) -> np.ndarray:
    fourier = fourier_basis(grid_points, config.j_gen)
    lam0 = _group_eigenvalues(config)[0]
    if config.eigenfunction_factor == SAME:
        return np.stack([fourier, fourier])
    if config.eigenfunction_factor == ROTATED:
        return np.stack([fourier, rotate_basis(fourier, lam0, ROTATION_SCALE_GROUP1)])
    return np.stack(
        [
            fourier,
            rotate_basis(fourier, lam0, ROTATION_SCALE_GROUP1),
            rotate_basis(fourier, lam0, ROTATION_SCALE_GROUP2),
        ]
    )


def _group_means(config: ScenarioConfig, grid_points: np.ndarray) -> np.ndarray:
    m = grid_points.size
    means = np.zeros((config.n_classes, m))
    if config.mean_factor == "different":
        means[1] = grid_points
        if config.n_classes == 3:
            fourier = fourier_basis(grid_points, config.j_gen)
            means[2] = fourier[config.j_gen - 10 : config.j_gen].sum(axis=0)
    return means


def _balanced_counts(total: int, k: int) -> np.ndarray:
    counts = np.full(k, total // k)
    counts[: total % k] += 1
    return counts


def generate(config: ScenarioConfig) -> tuple[FunctionalDataset, FunctionalDataset]:
    """Draw one (train, test) pair for the scenario; bit-reproducible from the seed.

    Every curve has its own Philox stream keyed by (split, group, index),
    so datasets do not depend on generation order.
    """
    grid = Grid.regular(0.0, 1.0, config.grid_points)
    bases = _group_bases(config, grid.points)
    eigenvalues = _group_eigenvalues(config)
    sqrt_eig = np.sqrt(eigenvalues)
    means = _group_means(config, grid.points)
    k = config.n_classes
    priors = np.full(k, 1.0 / k)

    datasets = []
    for split, total in ((0, config.n_train), (1, config.n_test)):
        counts = _balanced_counts(total, k)
        labels = np.repeat(np.arange(k), counts)
        curves = np.empty((total, config.grid_points))
        row = 0
        for g in range(k):
            for i in range(counts[g]):
                rng = stream(config.seed, split, g, i)
                xi = sample_scores(config.score_factor, g, 1, config.j_gen, rng, k)[0]
                noise = rng.normal(0.0, config.noise_sd, size=config.grid_points)
                curves[row] = means[g] + (sqrt_eig[g] * xi) @ bases[g] + noise
                row += 1
        datasets.append(FunctionalDataset(grid, curves, labels, priors))
    return datasets[0], datasets[1]


# ---------------------------------------------------------------------------
# Gaussian-theory diagnostics


@dataclass(frozen=True)
class TheoryDiagnostics:
    """Divergence quantities governing asymptotic separability of two Gaussian groups.

    ``delta_spectrum`` holds the eigenvalues (ascending) of
    R0^{1/2} R1^{-1} R0^{1/2}; identical groups give all ones.  The mean
    divergence is ||R0^{-1/2} mu||^2 and the variance divergence is
    sum (Delta_j - 1)^2; either growing without bound with J yields
    asymptotically perfect classification.
    """

    mean_divergence: float
    variance_divergence: float
    delta_spectrum: np.ndarray
    score_cov: tuple
    mu_vec: np.ndarray


def _refined_grid(config: ScenarioConfig, min_points: int = 2001) -> np.ndarray:
    m = config.grid_points
    factor = max(1, int(np.ceil((min_points - 1) / (m - 1))))
    return np.linspace(0.0, 1.0, factor * (m - 1) + 1)


def _joint_eigensystem(config: ScenarioConfig, n_components: int):
    """Top joint-covariance eigenfunctions on a refinement grid (analytic kernel)."""
    if config.n_classes != 2:
        raise ParameterError("theory diagnostics are defined for the binary design")
    t = _refined_grid(config)
    mm = t.size
    w = np.full(mm, t[1] - t[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    bases = _group_bases(config, t)
    eigenvalues = _group_eigenvalues(config)
    means = _group_means(config, t)
    mu_d = means[1] - means[0]
    kern = 0.5 * (bases[0].T * eigenvalues[0]) @ bases[0]
    kern += 0.5 * (bases[1].T * eigenvalues[1]) @ bases[1]
    kern += 0.25 * np.outer(mu_d, mu_d)
    sqrt_w = np.sqrt(w)
    sym = sqrt_w[:, None] * kern * sqrt_w[None, :]
    vals, vecs = scipy_eigh(sym, subset_by_index=(mm - n_components, mm - 1))
    order = np.argsort(vals)[::-1]
    funcs = (vecs[:, order] / sqrt_w[:, None]).T
    for rowfun in funcs:
        if rowfun[np.argmax(np.abs(rowfun))] < 0:
            rowfun *= -1.0
    return t, w, funcs, bases, eigenvalues, mu_d


def joint_eigenbasis(config: ScenarioConfig, n_components: int) -> np.ndarray:
    """Joint-covariance eigenfunctions evaluated on the observation grid."""
    t, _, funcs, _, _, _ = _joint_eigensystem(config, n_components)
    step = (t.size - 1) // (config.grid_points - 1)
    return funcs[:, ::step]


def theory_diagnostics(config: ScenarioConfig, n_components: int) -> TheoryDiagnostics:
    """Analytic score covariances and the two divergence sums at truncation J.

    Only defined for the Gaussian score factor: the quantities describe
    the exact distribution of scores on the joint eigenbasis, computed by
    quadrature on a refinement grid so accuracy does not depend on the
    coarse observation grid.
    """
    if config.score_factor != "n":
        raise ParameterError("theory diagnostics require the Gaussian score factor")
    _, w, funcs, bases, eigenvalues, mu_d = _joint_eigensystem(config, n_components)
    covs = []
    for k in range(2):
        gram = (bases[k] * w) @ funcs.T  # <phi_qk, phi_j>
        covs.append(gram.T @ (eigenvalues[k][:, None] * gram))
    r0, r1 = covs
    mu_vec = funcs @ (w * mu_d)
    mean_div = float(mu_vec @ np.linalg.solve(r0, mu_vec))
    vals0, vecs0 = np.linalg.eigh(r0)
    sqrt_r0 = (vecs0 * np.sqrt(np.maximum(vals0, 0.0))) @ vecs0.T
    middle = sqrt_r0 @ np.linalg.solve(r1, sqrt_r0)
    delta = np.linalg.eigvalsh(0.5 * (middle + middle.T))
    if np.any(delta <= 0):
        raise ParameterError("score covariances are not positive definite at this J")
    return TheoryDiagnostics(
        mean_div,
        float(np.sum((delta - 1.0) ** 2)),
        delta,
        (r0, r1),
        mu_vec,
    )


def oracle_quadratic_log_ratio(diag: TheoryDiagnostics, scores: np.ndarray) -> np.ndarray:
    """Population Gaussian log ratio for score rows on the joint basis.

    log Q*(x) = -(x-mu)' R1^{-1} (x-mu)/2 + x' R0^{-1} x/2 + log(|R0|/|R1|)/2;
    positive values classify to group 1.
    """
    r0, r1 = diag.score_cov
    x = np.atleast_2d(np.asarray(scores, dtype=float))
    centered = x - diag.mu_vec
    quad1 = np.einsum("ij,ij->i", centered, np.linalg.solve(r1, centered.T).T)
    quad0 = np.einsum("ij,ij->i", x, np.linalg.solve(r0, x.T).T)
    _, logdet0 = np.linalg.slogdet(r0)
    _, logdet1 = np.linalg.slogdet(r1)
    return -0.5 * quad1 + 0.5 * quad0 + 0.5 * (logdet0 - logdet1)
