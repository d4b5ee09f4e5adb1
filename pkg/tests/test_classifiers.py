import numpy as np
import pytest
from dataclasses import replace
from scipy.stats import norm

from funbayes import (
    BasisSystem,
    ClassifierSpec,
    CopulaModel,
    CVRange,
    FunctionalDataset,
    Grid,
    MarginalEstimate,
    Method,
    ParameterError,
    TrainedBayesModel,
    centroid_score,
    classify,
    log_posterior_ratios,
    log_posteriors,
    predict,
    select_classifier_cv,
    select_J_cv,
    stratified_folds,
    train,
)
from funbayes.classifiers import (
    _fold_candidate_errors,
    _lda_discriminants,
    _pooled_within_cov,
)
from funbayes.copula import INDEPENDENCE
from funbayes.model_io import model_to_dict


def iid_score_dataset(rng, n=200, j_informative=2, shift=1.2):
    """Curves with independent scores on a fixed Fourier-ish system."""
    grid = Grid.regular(0.0, 1.0, 51)
    t = grid.points
    funcs = np.vstack(
        [np.ones_like(t), np.sqrt(2) * np.cos(2 * np.pi * t), np.sqrt(2) * np.sin(2 * np.pi * t)]
    )
    labels = np.array([0, 1] * (n // 2))
    scores = rng.standard_normal((n, 3)) * np.array([1.0, 0.6, 0.3])
    scores[labels == 1, :j_informative] += shift
    curves = scores @ funcs + 0.05 * rng.standard_normal((n, t.size))
    return FunctionalDataset.from_arrays(grid, curves, labels)


class TestSpecValidation:
    def test_copula_methods_need_j_at_least_two(self):
        with pytest.raises(ParameterError):
            ClassifierSpec(Method.BCG, 1)
        with pytest.raises(ParameterError):
            ClassifierSpec(Method.BCT, CVRange(1, 5))
        ClassifierSpec(Method.BC, 1)  # fine for the independence Bayes rule

    def test_method_coercion_from_string(self):
        spec = ClassifierSpec("bcg", 3)
        assert spec.method is Method.BCG


class TestBayesTraining:
    def test_identical_groups_reduce_to_prior_comparison(self, unit_grid, rng):
        half = rng.standard_normal((30, 51))
        curves = np.vstack([half, half])  # group 1 duplicates group 0 exactly
        labels = np.array([0] * 30 + [1] * 30)
        ds = FunctionalDataset.from_arrays(unit_grid, curves, labels)
        model = train(ClassifierSpec(Method.BCG, 3), ds)
        lp = log_posteriors(model, ds.curves[:10])
        assert np.allclose(lp[:, 1] - lp[:, 0], 0.0, atol=1e-12)
        assert np.all(classify(model, ds.curves[:10]) == 0)  # ties go to group 0

    def test_bc_and_bcg_agree_on_independent_scores(self, rng):
        # no mean shift: the joint eigenbasis then matches the generative one,
        # so within-group scores really are independent
        ds = iid_score_dataset(rng, n=2000, shift=0.0)
        bc = train(ClassifierSpec(Method.BC, 3), ds)
        bcg = train(ClassifierSpec(Method.BCG, 3), ds)
        lp_bc = log_posteriors(bc, ds.curves[:200])
        lp_bcg = log_posteriors(bcg, ds.curves[:200])
        copula_term = (lp_bcg[:, 1] - lp_bcg[:, 0]) - (lp_bc[:, 1] - lp_bc[:, 0])
        assert np.mean(np.abs(copula_term)) < 0.2

    def test_training_is_reproducible(self, rng):
        ds = iid_score_dataset(rng, n=80)
        spec = ClassifierSpec(Method.BCT, CVRange(2, 5), folds=5)
        m1 = train(spec, ds, rng=np.random.default_rng(42))
        m2 = train(spec, ds, rng=np.random.default_rng(42))
        assert model_to_dict(m1) == model_to_dict(m2)

    def test_group_too_small_for_copula(self, unit_grid, rng):
        curves = rng.standard_normal((8, 51))
        ds = FunctionalDataset.from_arrays(unit_grid, curves, [0, 0, 0, 0, 1, 1, 1, 1])
        with pytest.raises(ParameterError, match="smaller J"):
            train(ClassifierSpec(Method.BCG, 5), ds)

    def test_bcg_with_identity_copula_reproduces_bc(self, rng):
        ds = iid_score_dataset(rng, n=100)
        bc = train(ClassifierSpec(Method.BC, 3), ds)
        bcg = train(ClassifierSpec(Method.BCG, 3), ds)
        forced = replace(bcg, copulas=tuple(CopulaModel.independence(3) for _ in range(2)))
        probe = rng.standard_normal((50, 51))
        assert np.array_equal(log_posteriors(forced, probe), log_posteriors(bc, probe))
        assert np.array_equal(classify(forced, probe), classify(bc, probe))


class TestLogPosteriorMicroCase:
    def test_hand_computed_independence_ratio(self):
        grid = Grid(np.array([0.0, 0.5, 1.0]))
        basis = BasisSystem("pc", grid, np.ones((1, 3)), np.zeros(3))
        marg0 = MarginalEstimate(np.array([-1.0, 1.0]), bandwidth=1.0, sd=1.0)
        marg1 = MarginalEstimate(np.array([0.0, 2.0]), bandwidth=1.0, sd=1.0)
        model = TrainedBayesModel(
            Method.BC,
            basis,
            np.array([0.5, 0.5]),
            ((marg0,), (marg1,)),
            (CopulaModel.independence(1), CopulaModel.independence(1)),
        )
        curve = np.full(3, 0.4)  # projects to score 0.4 under the unit weight function
        score = 0.4
        lp = log_posterior_ratios(model, curve)
        f0 = 0.5 * (norm.pdf(score - (-1.0)) + norm.pdf(score - 1.0))
        f1 = 0.5 * (norm.pdf(score - 0.0) + norm.pdf(score - 2.0))
        expected = np.log(f1) - np.log(f0)
        assert lp[1] - lp[0] == pytest.approx(expected, abs=1e-12)

    def test_scale_invariance_of_decisions(self, rng):
        ds = iid_score_dataset(rng, n=120, shift=0.9)
        probe = rng.standard_normal((60, 51)) + ds.curves[:60]
        base = None
        for c in (1.0, 0.1, 10.0):
            scaled = FunctionalDataset.from_arrays(
                ds.grid, c * ds.curves, ds.labels, ds.priors
            )
            model = train(ClassifierSpec(Method.BCG, 3), scaled)
            decisions = classify(model, c * probe)
            if base is None:
                base = decisions
            else:
                assert np.array_equal(decisions, base)


class TestCentroid:
    @pytest.fixture
    def centroid_setup(self, two_group_dataset):
        from funbayes.fdata import center_by_group

        model = train(ClassifierSpec(Method.CEN, 3), two_group_dataset)
        _, means = center_by_group(two_group_dataset)
        return model, means

    def test_group_means_classified_correctly(self, centroid_setup):
        model, means = centroid_setup
        assert centroid_score(model, means[1]) <= 0
        assert centroid_score(model, means[0]) >= 0
        assert predict(model, means)[1] == 1
        assert predict(model, means)[0] == 0

    def test_tie_goes_to_group_one(self, centroid_setup, unit_grid, rng):
        from funbayes.classifiers import CentroidModel

        model, _ = centroid_setup
        # equal projected means force T(x) = 0 exactly for every curve
        tied = CentroidModel(model.grid, model.psi, 1.25, 1.25, model.n_components)
        probe = rng.standard_normal((5, unit_grid.n_points))
        assert np.all(predict(tied, probe) == 1)
        assert centroid_score(tied, probe[0]) == 0.0

    def test_multiclass_rejected(self, unit_grid, rng):
        curves = rng.standard_normal((12, 51))
        labels = [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]
        ds = FunctionalDataset.from_arrays(unit_grid, curves, labels)
        with pytest.raises(ParameterError):
            train(ClassifierSpec(Method.CEN, 2), ds)


class TestPLSDA:
    def test_separated_clouds_zero_training_error(self, rng):
        ds = iid_score_dataset(rng, n=100, shift=6.0)
        model = train(ClassifierSpec(Method.PLSDA, 2), ds)
        assert np.mean(predict(model, ds.curves) != ds.labels) == 0.0

    def test_null_data_near_chance_on_holdout(self, rng):
        ds = iid_score_dataset(rng, n=400, shift=0.0)
        holdout = iid_score_dataset(np.random.default_rng(999), n=400, shift=0.0)
        model = train(ClassifierSpec(Method.PLSDA, 3), ds)
        err = np.mean(predict(model, holdout.curves) != holdout.labels)
        assert 0.35 < err < 0.65

    def test_fisher_direction_matches_hand_formula(self):
        scores = np.array(
            [[0.0, 0.0], [1.0, 0.2], [0.2, 1.0], [3.0, 2.8], [4.0, 3.1], [3.5, 4.0]]
        )
        labels = np.array([0, 0, 0, 1, 1, 1])
        means, cov = _pooled_within_cov(scores, labels, 2)
        w = np.linalg.solve(cov, means[1] - means[0])
        disc = _lda_discriminants(scores, means, np.linalg.inv(cov), np.array([0.5, 0.5]))
        margins = disc[:, 1] - disc[:, 0]
        # the discriminant margin is an affine function with gradient w
        grads = []
        for dim in range(2):
            e = np.zeros(2)
            e[dim] = 1.0
            shifted = _lda_discriminants(scores + e, means, np.linalg.inv(cov), np.array([0.5, 0.5]))
            grads.append((shifted[:, 1] - shifted[:, 0] - margins)[0])
        assert np.allclose(grads, w, rtol=1e-10)


class TestLogistic:
    def test_symmetric_data_small_intercept(self, rng):
        ds = iid_score_dataset(rng, n=2000, shift=0.0)
        model = train(ClassifierSpec(Method.LOGISTIC, 2), ds)
        assert abs(model.coef[0, 0]) < 0.2

    def test_coefficient_recovery(self):
        rng = np.random.default_rng(8)
        n = 20000
        grid = Grid.regular(0.0, 1.0, 11)
        x = rng.standard_normal(n)
        logits = 0.5 + 1.5 * x
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(int)
        curves = np.outer(x, np.ones(11)) * np.sqrt(3)  # score ~ x under unit weights
        ds = FunctionalDataset.from_arrays(grid, curves + 1e-6 * rng.standard_normal((n, 11)), y)
        model = train(ClassifierSpec(Method.LOGISTIC, 1), ds)
        basis_scale = (np.sqrt(3) * np.ones(11)) @ (grid.quad_weights * model.basis.functions[0])
        slope_on_x = model.coef[0, 1] * basis_scale
        assert abs(model.coef[0, 0] - 0.5) < 0.1
        assert abs(abs(slope_on_x) - 1.5) < 0.15

    def test_separation_caps_coefficients(self):
        # perfectly separated with a small margin: the unconstrained MLE
        # diverges, so the coefficient must hit the cap
        grid = Grid.regular(0.0, 1.0, 11)
        vals = np.concatenate([np.linspace(-0.6, -0.1, 10), np.linspace(0.1, 0.6, 10)])
        labels = np.array([0] * 10 + [1] * 10)
        curves = np.outer(vals, np.ones(11))
        ds = FunctionalDataset.from_arrays(grid, curves + 1e-9 * np.random.default_rng(0).standard_normal((20, 11)), labels)
        model = train(ClassifierSpec(Method.LOGISTIC, 1), ds)
        assert model.capped
        pred = predict(model, ds.curves)
        assert np.mean(pred != ds.labels) == 0.0


class TestSelectJCV:
    def test_perfect_separation_ties_break_to_smallest(self, rng):
        ds = iid_score_dataset(rng, n=60, shift=8.0)
        spec = ClassifierSpec(Method.BC, CVRange(1, 4), folds=5)
        res = select_J_cv(spec, ds, rng=np.random.default_rng(0))
        assert res.errors[0] == 0.0
        assert res.j_star == 1  # every J separates perfectly; ties go small

    def test_deterministic_given_rng_seed(self, rng):
        ds = iid_score_dataset(rng, n=80, shift=0.6)
        spec = ClassifierSpec(Method.BCG, CVRange(2, 6), folds=5)
        r1 = select_J_cv(spec, ds, rng=np.random.default_rng(5))
        r2 = select_J_cv(spec, ds, rng=np.random.default_rng(5))
        assert r1.j_star == r2.j_star
        assert np.array_equal(r1.errors, r2.errors)

    def test_pure_noise_errors_near_half(self, rng):
        ds = iid_score_dataset(rng, n=100, shift=0.0)
        spec = ClassifierSpec(Method.BCG, CVRange(2, 5), folds=5)
        res = select_J_cv(spec, ds, rng=np.random.default_rng(1))
        assert np.nanmin(res.errors) > 0.25
        assert np.nanmax(res.errors) < 0.75

    def test_infeasible_candidates_marked(self, unit_grid, rng):
        curves = rng.standard_normal((20, 51))
        ds = FunctionalDataset.from_arrays(unit_grid, curves, [0, 1] * 10)
        spec = ClassifierSpec(Method.BCG, CVRange(2, 12), folds=5)
        res = select_J_cv(spec, ds, rng=np.random.default_rng(0))
        # fold training sets hold 8 curves per group; copula needs n_k >= J+1
        assert np.all(np.isnan(res.errors[res.candidates > 7]))
        assert not np.isnan(res.errors[0])

    def test_held_out_labels_do_not_touch_fold_models(self, rng):
        ds = iid_score_dataset(rng, n=80, shift=0.7)
        spec = ClassifierSpec(Method.BCG, CVRange(2, 4), folds=5)
        folds = stratified_folds(ds.labels, 5, np.random.default_rng(3))
        fold = folds[0]
        mask = np.ones(ds.n_curves, dtype=bool)
        mask[fold] = False
        train_ds = ds.subset(np.flatnonzero(mask))
        candidates = np.arange(2, 5)
        counts, ok = _fold_candidate_errors(spec, train_ds, ds.curves[fold], ds.labels[fold], candidates)
        flipped, ok2 = _fold_candidate_errors(
            spec, train_ds, ds.curves[fold], 1 - ds.labels[fold], candidates
        )
        assert np.array_equal(ok, ok2)
        # binary labels: flipping the held-out labels must exactly complement the error counts
        assert np.allclose(counts + flipped, fold.size)

    def test_folds_share_split_across_methods(self, rng):
        ds = iid_score_dataset(rng, n=80, shift=0.7)
        folds = stratified_folds(ds.labels, 5, np.random.default_rng(11))
        r1 = select_J_cv(ClassifierSpec(Method.BC, CVRange(1, 3), folds=5), ds, folds_idx=folds)
        r2 = select_J_cv(ClassifierSpec(Method.BC, CVRange(1, 3), folds=5), ds, folds_idx=folds)
        assert np.array_equal(r1.errors, r2.errors)


class TestStratifiedFolds:
    def test_preserves_group_balance(self, rng):
        labels = np.array([0] * 50 + [1] * 50)
        folds = stratified_folds(labels, 10, rng)
        for f in folds:
            assert np.sum(labels[f] == 0) == 5
            assert np.sum(labels[f] == 1) == 5

    def test_partition(self, rng):
        labels = np.array([0] * 21 + [1] * 19)
        folds = stratified_folds(labels, 7, rng)
        allidx = np.sort(np.concatenate(folds))
        assert np.array_equal(allidx, np.arange(40))

    def test_leave_one_out_supported(self, rng):
        labels = np.array([0, 1] * 10)
        folds = stratified_folds(labels, 20, rng)
        assert all(f.size == 1 for f in folds)

    def test_rejects_fold_starving_a_group(self, rng):
        labels = np.array([0, 0, 1, 1])
        with pytest.raises(ParameterError):
            stratified_folds(labels, 3, rng)  # some fold would leave < 2 in a group


class TestSelectClassifierCV:
    def test_single_spec_returned(self, rng):
        ds = iid_score_dataset(rng, n=60, shift=1.0)
        spec = ClassifierSpec(Method.BC, CVRange(1, 3), folds=5)
        best, results = select_classifier_cv(ds, [spec], rng=np.random.default_rng(0))
        assert best == spec
        assert results[spec].j_star >= 1

    def test_null_data_runs(self, rng):
        ds = iid_score_dataset(rng, n=60, shift=0.0)
        specs = [
            ClassifierSpec(Method.BC, CVRange(1, 3), folds=5),
            ClassifierSpec(Method.CEN, CVRange(1, 3), folds=5),
        ]
        best, results = select_classifier_cv(ds, specs, rng=np.random.default_rng(0))
        assert best in specs

    def test_picks_obviously_better_method(self, rng):
        # strong mean shift: the centroid classifier should beat pure-noise logistic on J=1
        ds = iid_score_dataset(rng, n=120, shift=3.0)
        specs = [
            ClassifierSpec(Method.CEN, CVRange(1, 2), folds=5),
            ClassifierSpec(Method.BC, CVRange(1, 2), folds=5),
        ]
        best, results = select_classifier_cv(ds, specs, rng=np.random.default_rng(0))
        assert results[best].best_error == min(r.best_error for r in results.values())


class TestSignChangeAlongInterpolation:
    def test_log_ratio_crosses_sign_between_means(self, rng):
        from funbayes.fdata import center_by_group

        ds = iid_score_dataset(rng, n=300, shift=2.0)
        model = train(ClassifierSpec(Method.BCG, 2), ds)
        _, means = center_by_group(ds)
        lp0 = log_posterior_ratios(model, means[0])
        lp1 = log_posterior_ratios(model, means[1])
        assert lp0[1] - lp0[0] < 0
        assert lp1[1] - lp1[0] > 0
