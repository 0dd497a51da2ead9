import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrspace import numerics
from corrspace.errors import DegenerateRowError, DimensionError, NonFiniteError


class TestSigmoidTanh:
    def test_sigmoid_zero_is_half(self):
        assert numerics.sigmoid(np.zeros((2, 2))) == pytest.approx(0.5)

    def test_sigmoid_log3(self):
        # closed form: 1 / (1 + exp(-ln 3)) = 1 / (1 + 1/3) = 0.75
        assert numerics.sigmoid(np.array([[math.log(3.0)]]))[0, 0] == pytest.approx(0.75, abs=1e-12)

    @given(st.floats(min_value=-50, max_value=50))
    def test_sigmoid_symmetry(self, x):
        arr = np.array([[x]])
        assert numerics.sigmoid(arr)[0, 0] == pytest.approx(1.0 - numerics.sigmoid(-arr)[0, 0], abs=1e-12)

    def test_sigmoid_extreme_inputs_stay_finite(self):
        out = numerics.sigmoid(np.array([[-1e6, 1e6]]))
        assert np.all(np.isfinite(out))
        assert out[0, 0] == 0.0 and out[0, 1] == 1.0

    def test_tanh_zero(self):
        assert numerics.tanh_map(np.zeros((1, 3))) == pytest.approx(0.0)

    @given(st.floats(min_value=-30, max_value=30))
    def test_tanh_odd(self, x):
        assert numerics.tanh_map(np.array([x]))[0] == pytest.approx(-numerics.tanh_map(np.array([-x]))[0])

    def test_tanh_saturation_no_overflow(self):
        out = numerics.tanh_map(np.array([[20.0, 300.0, 1e12]]))
        assert np.all(np.isfinite(out))
        assert np.all(np.abs(out - 1.0) < 1e-9)


class TestCosineRowLoss:
    def test_identical_rows_zero(self, rng):
        x = rng.normal(size=(5, 4)) + 0.1
        assert numerics.cosine_row_loss(x, x.copy()) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_rows(self):
        assert numerics.cosine_row_loss(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])) == pytest.approx(1.0)

    def test_antipodal_rows(self):
        assert numerics.cosine_row_loss(np.array([[1.0, 0.0]]), np.array([[-1.0, 0.0]])) == pytest.approx(2.0)

    @given(st.floats(min_value=1e-3, max_value=1e3))
    @settings(max_examples=30)
    def test_scale_invariance(self, alpha):
        x = np.arange(1.0, 13.0).reshape(4, 3)
        assert numerics.cosine_row_loss(x, alpha * x) == pytest.approx(0.0, abs=1e-9)

    def test_degenerate_row_names_index(self):
        x = np.ones((3, 2))
        y = np.ones((3, 2))
        y[1] = 0.0
        with pytest.raises(DegenerateRowError) as exc:
            numerics.cosine_row_loss(x, y)
        assert exc.value.row == 1
        assert exc.value.side == "Y"

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            numerics.cosine_row_loss(np.ones((2, 2)), np.ones((3, 2)))

    def test_row_terms_bounded(self, rng):
        for _ in range(50):
            x = rng.normal(size=(1, 5)) + 0.01
            y = rng.normal(size=(1, 5)) + 0.01
            term = numerics.cosine_row_loss(x, y)
            assert 0.0 <= term <= 2.0


class TestPearson:
    def test_exact_linear(self):
        assert numerics.pearson(np.array([1.0, 2, 3]), np.array([2.0, 4, 6])) == pytest.approx(1.0)

    def test_exact_anti_linear(self):
        assert numerics.pearson(np.array([1.0, 2, 3]), np.array([3.0, 2, 1])) == pytest.approx(-1.0)

    def test_against_direct_formula(self):
        # independent oracle: textbook covariance-over-std formula
        x = np.array([1.0, 2.0, 3.0, 4.0])
        y = np.array([1.0, 3.0, 2.0, 4.0])
        xc, yc = x - x.mean(), y - y.mean()
        expected = (xc * yc).sum() / math.sqrt((xc * xc).sum() * (yc * yc).sum())
        assert numerics.pearson(x, y) == pytest.approx(expected, abs=1e-12)

    def test_constant_input_flagged_zero(self):
        r, degenerate = numerics.pearson_flagged(np.array([1.0, 1.0, 1.0]), np.array([1.0, 2.0, 3.0]))
        assert r == 0.0 and degenerate

    def test_length_errors(self):
        with pytest.raises(DimensionError):
            numerics.pearson(np.array([1.0, 2.0]), np.array([1.0, 2.0, 3.0]))
        with pytest.raises(DimensionError):
            numerics.pearson(np.array([1.0]), np.array([1.0]))

    @given(st.floats(min_value=-5, max_value=5).filter(lambda a: abs(a) > 1e-3),
           st.floats(min_value=-5, max_value=5))
    @settings(max_examples=50)
    def test_affine_gives_sign(self, a, b):
        x = np.array([0.3, 1.7, -2.2, 4.1, 0.9])
        assert numerics.pearson(x, a * x + b) == pytest.approx(math.copysign(1.0, a), abs=1e-9)


class TestCCA:
    def test_affine_relation_is_one(self, rng):
        x = rng.normal(size=(400, 3))
        r = rng.normal(size=(3, 3)) + 3 * np.eye(3)
        s = x @ r + 1.0
        assert numerics.cca_first_correlation(x, s) == pytest.approx(1.0, abs=1e-6)

    def test_independent_data_is_small(self, rng):
        x = rng.normal(size=(10000, 2))
        s = rng.normal(size=(10000, 2))
        assert numerics.cca_first_correlation(x, s) < 0.1

    def test_shared_column(self, rng):
        # column variance is kept well above the ridge so the whitening bias
        # stays below the 1e-9 tolerance
        col = 10.0 * rng.normal(size=300)
        x = col[:, None]
        s = np.column_stack([rng.normal(size=300), col])
        assert numerics.cca_first_correlation(x, s) == pytest.approx(1.0, abs=1e-9)

    def test_symmetric(self, rng):
        x = rng.normal(size=(50, 3))
        s = rng.normal(size=(50, 4))
        a = numerics.cca_first_correlation(x, s)
        b = numerics.cca_first_correlation(s, x)
        assert abs(a - b) < 1e-9

    def test_rank_deficient_still_succeeds(self, rng):
        x = rng.normal(size=(40, 3))
        x[:, 2] = x[:, 0] + x[:, 1]  # exactly dependent columns
        s = rng.normal(size=(40, 2))
        value = numerics.cca_first_correlation(x, s)
        assert 0.0 <= value <= 1.0

    def test_too_few_rows(self):
        with pytest.raises(DimensionError):
            numerics.cca_first_correlation(np.ones((1, 2)), np.ones((1, 2)))


def _scalar_adadelta_sequence(g_values, rho=0.95, eps=1e-6, lr=0.5, p0=1.0):
    # independent scalar reimplementation used as the oracle
    eg = ex = 0.0
    p = p0
    for g in g_values:
        eg = rho * eg + (1 - rho) * g * g
        delta = -math.sqrt(ex + eps) / math.sqrt(eg + eps) * g
        p += lr * delta
        ex = rho * ex + (1 - rho) * delta * delta
    return p


class TestAdadelta:
    def test_zero_grad_leaves_params_decays_accumulators(self):
        params = {"p": np.array([1.0, -2.0])}
        state = numerics.AdadeltaState()
        state.sq_grad["p"] = np.array([4.0, 4.0])
        state.sq_update["p"] = np.array([2.0, 2.0])
        numerics.adadelta_step(params, {"p": np.zeros(2)}, state)
        assert params["p"] == pytest.approx([1.0, -2.0])
        assert state.sq_grad["p"] == pytest.approx([3.8, 3.8])
        assert state.sq_update["p"] == pytest.approx([1.9, 1.9])

    def test_first_step_closed_form(self):
        g = 0.7
        params = {"p": np.array([1.0])}
        state = numerics.AdadeltaState(rho=0.95, eps=1e-6, lr=0.5)
        numerics.adadelta_step(params, {"p": np.array([g])}, state)
        expected_delta = -0.5 * (math.sqrt(1e-6) / math.sqrt(0.05 * g * g + 1e-6)) * g
        assert params["p"][0] == pytest.approx(1.0 + expected_delta, rel=1e-12)

    def test_two_steps_match_scalar_oracle(self):
        params = {"p": np.array([1.0])}
        state = numerics.AdadeltaState()
        for _ in range(2):
            numerics.adadelta_step(params, {"p": np.array([0.3])}, state)
        assert params["p"][0] == pytest.approx(_scalar_adadelta_sequence([0.3, 0.3]), rel=1e-12)

    def test_deterministic_bitwise(self, rng):
        base = rng.normal(size=(3, 3))
        grad = rng.normal(size=(3, 3))
        results = []
        for _ in range(2):
            params = {"p": base.copy()}
            state = numerics.AdadeltaState()
            for _ in range(5):
                numerics.adadelta_step(params, {"p": grad}, state)
            results.append(params["p"])
        assert np.array_equal(results[0], results[1])

    def test_accumulators_nonnegative(self, rng):
        params = {"p": rng.normal(size=4)}
        state = numerics.AdadeltaState()
        for _ in range(20):
            numerics.adadelta_step(params, {"p": rng.normal(size=4)}, state)
            assert np.all(state.sq_grad["p"] >= 0)
            assert np.all(state.sq_update["p"] >= 0)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            numerics.adadelta_step({"p": np.zeros(2)}, {"p": np.zeros(3)}, numerics.AdadeltaState())


class TestFiniteDiffCheck:
    def test_quadratic_loss(self, rng):
        p0 = rng.uniform(-1, 1, size=(3, 2))

        def quad(params):
            p = params["p"]
            return float(np.sum(p * p)), {"p": 2.0 * p}

        report = numerics.finite_diff_check(quad, {"p": p0}, tolerance=1e-4)
        assert report.passed
        assert report.max_rel_error < 1e-8

    def test_sigmoid_affine_chain(self, rng):
        x = rng.uniform(-1, 1, size=(4, 3))
        target = rng.uniform(0.2, 0.8, size=(4, 2))

        def chain(params):
            w, b = params["w"], params["b"]
            out = numerics.sigmoid(numerics.affine(x, w, b))
            diff = out - target
            loss = float(np.sum(diff * diff))
            d_pre = numerics.sigmoid_backward(2.0 * diff, out)
            _, d_w, d_b = numerics.affine_backward(d_pre, x, w)
            return loss, {"w": d_w, "b": d_b}

        report = numerics.finite_diff_check(
            chain, {"w": rng.uniform(-1, 1, size=(3, 2)), "b": rng.uniform(-1, 1, size=2)}
        )
        assert report.passed
        assert report.max_rel_error < 1e-6

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_primitives_on_five_seeds(self, seed):
        # composes affine, sigmoid, tanh, max-pool, concatenation and the
        # cosine row loss into one scalar and checks every gradient path
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1, 1, size=(6, 3))
        target = rng.uniform(-1, 1, size=(1, 8))

        def composite(params):
            w, b = params["w"], params["b"]
            pre = numerics.affine(x, w, b)
            sig = numerics.sigmoid(pre)
            tan = numerics.tanh_map(pre)
            pooled_s, arg_s = numerics.max_pool(sig)
            pooled_t, arg_t = numerics.max_pool(tan)
            rep = np.concatenate([pooled_s, pooled_t])[None, :]
            loss, d_rep, _ = numerics.cosine_row_loss_backward(rep, target)
            d_pooled_s = d_rep[0, : pooled_s.size]
            d_pooled_t = d_rep[0, pooled_s.size :]
            d_sig = numerics.max_pool_backward(d_pooled_s, arg_s, sig.shape[0])
            d_tan = numerics.max_pool_backward(d_pooled_t, arg_t, tan.shape[0])
            d_pre = numerics.sigmoid_backward(d_sig, sig) + numerics.tanh_backward(d_tan, tan)
            _, d_w, d_b = numerics.affine_backward(d_pre, x, w)
            return loss, {"w": d_w, "b": d_b}

        params = {"w": rng.uniform(-1, 1, size=(3, 4)), "b": rng.uniform(-1, 1, size=4)}
        report = numerics.finite_diff_check(composite, params, tolerance=1e-4)
        assert report.passed, report.summary()

    def test_cosine_loss_gradients(self, rng):
        y = rng.uniform(-1, 1, size=(5, 4)) + 0.1

        def loss(params):
            value, d_x, _ = numerics.cosine_row_loss_backward(params["x"], y)
            return value, {"x": d_x}

        report = numerics.finite_diff_check(loss, {"x": rng.uniform(-1, 1, size=(5, 4)) + 0.1})
        assert report.passed

    def test_nonfinite_loss_aborts(self):
        def bad(params):
            return float("nan"), {"p": np.zeros(1)}

        with pytest.raises(NonFiniteError):
            numerics.finite_diff_check(bad, {"p": np.zeros(1)})

    def test_report_names_failing_block(self, rng):
        def wrong(params):
            p = params["p"]
            return float(np.sum(p * p)), {"p": 3.0 * p}  # deliberately wrong factor

        report = numerics.finite_diff_check(wrong, {"p": rng.uniform(0.5, 1.0, size=3)})
        assert not report.passed
        assert report.worst_block == "p"
