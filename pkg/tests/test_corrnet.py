import numpy as np
import pytest

from corrspace import corrnet, numerics, trainer
from corrspace.errors import DimensionError


def make_params(d, h, rng):
    return corrnet.ProjectionParams(
        w=rng.uniform(-0.5, 0.5, size=(d, h)),
        b=rng.uniform(-0.2, 0.2, size=h),
        b_prime=rng.uniform(-0.2, 0.2, size=d),
    )


class TestProjectBasic:
    def test_zero_input_zero_bias_gives_half(self, rng):
        p = corrnet.ProjectionParams(rng.normal(size=(4, 3)), np.zeros(3), np.zeros(4))
        h = corrnet.project_basic(np.zeros((2, 4)), p)
        assert h == pytest.approx(0.5)

    def test_one_by_one(self):
        p = corrnet.ProjectionParams(np.array([[1.0]]), np.array([-2.0]), np.zeros(1))
        assert corrnet.project_basic(np.array([[2.0]]), p)[0, 0] == pytest.approx(0.5)

    def test_default_common_dim_is_512(self):
        assert trainer.TrainConfig().dim_common == 512
        p = corrnet.init_projection(8, trainer.TrainConfig().dim_common, np.random.default_rng(0))
        h = corrnet.project_basic(np.zeros((2, 8)), p)
        assert h.shape == (2, 512)

    def test_output_in_open_unit_interval(self, rng):
        p = make_params(5, 3, rng)
        h = corrnet.project_basic(rng.normal(size=(7, 5)), p)
        assert np.all(h > 0) and np.all(h < 1)

    def test_dimension_mismatch(self, rng):
        p = make_params(5, 3, rng)
        with pytest.raises(DimensionError):
            corrnet.project_basic(rng.normal(size=(2, 4)), p)

    def test_init_bounds(self):
        p = corrnet.init_projection(6, 4, np.random.default_rng(0))
        bound = np.sqrt(6.0 / 10.0)
        assert np.all(np.abs(p.w) <= bound)
        assert np.all(p.b == 0) and np.all(p.b_prime == 0)


class TestReconstruct:
    def test_zero_weight_gives_half(self, rng):
        p = corrnet.ProjectionParams(np.zeros((4, 3)), np.zeros(3), np.zeros(4))
        rec = corrnet.reconstruct(rng.uniform(size=(5, 3)), p)
        assert rec == pytest.approx(0.5)

    def test_shapes(self, rng):
        p = make_params(4, 3, rng)
        rec = corrnet.reconstruct(rng.uniform(size=(7, 3)), p)
        assert rec.shape == (7, 4)
        roundtrip = corrnet.reconstruct(corrnet.project_basic(rng.normal(size=(6, 4)), p), p)
        assert roundtrip.shape == (6, 4)

    def test_wrong_h_width(self, rng):
        p = make_params(4, 3, rng)
        with pytest.raises(DimensionError):
            corrnet.reconstruct(rng.uniform(size=(2, 5)), p)


def straight_line_o_w(m_i, m_j, p_i, p_j):
    # independent recomputation of the five loss terms, one by one
    h_i = numerics.sigmoid(m_i @ p_i.w + p_i.b)
    h_j = numerics.sigmoid(m_j @ p_j.w + p_j.b)
    m_p_i = numerics.sigmoid(h_i @ p_i.w.T + p_i.b_prime)
    m_s_i = numerics.sigmoid(h_j @ p_i.w.T + p_i.b_prime)
    m_p_j = numerics.sigmoid(h_j @ p_j.w.T + p_j.b_prime)
    m_s_j = numerics.sigmoid(h_i @ p_j.w.T + p_j.b_prime)

    def cos_dist(x, y):
        total = 0.0
        for xr, yr in zip(x, y):
            total += 1.0 - float(xr @ yr / (np.linalg.norm(xr) * np.linalg.norm(yr)))
        return total

    return (cos_dist(m_p_i, m_i) + cos_dist(m_s_i, m_i)
            + cos_dist(m_p_j, m_j) + cos_dist(m_s_j, m_j) + cos_dist(h_i, h_j))


class TestLossWord:
    def test_same_language_degenerate(self, rng):
        m = rng.normal(size=(4, 3)) + 0.1
        p = make_params(3, 2, rng)
        loss = corrnet.loss_word(m, m, p, p)
        h = corrnet.project_basic(m, p)
        rec = corrnet.reconstruct(h, p)
        expected = 2.0 * (numerics.cosine_row_loss(rec, m) + numerics.cosine_row_loss(rec, m))
        assert loss == pytest.approx(expected, rel=1e-12)

    def test_matches_term_by_term_oracle(self, rng):
        m_i = rng.normal(size=(4, 3)) + 0.05
        m_j = rng.normal(size=(4, 3)) + 0.05
        p_i, p_j = make_params(3, 2, rng), make_params(3, 2, rng)
        assert corrnet.loss_word(m_i, m_j, p_i, p_j) == pytest.approx(
            straight_line_o_w(m_i, m_j, p_i, p_j), rel=1e-10
        )

    def test_invariant_to_simultaneous_row_permutation(self, rng):
        m_i = rng.normal(size=(6, 3)) + 0.05
        m_j = rng.normal(size=(6, 3)) + 0.05
        p_i, p_j = make_params(3, 2, rng), make_params(3, 2, rng)
        perm = rng.permutation(6)
        a = corrnet.loss_word(m_i, m_j, p_i, p_j)
        b = corrnet.loss_word(m_i[perm], m_j[perm], p_i, p_j)
        assert a == pytest.approx(b, rel=1e-12)

    def test_nonnegative(self, rng):
        for _ in range(20):
            m_i = rng.normal(size=(3, 4)) + 0.05
            m_j = rng.normal(size=(3, 4)) + 0.05
            assert corrnet.loss_word(m_i, m_j, make_params(4, 3, rng), make_params(4, 3, rng)) >= 0.0

    def test_row_count_mismatch(self, rng):
        with pytest.raises(DimensionError):
            corrnet.loss_word(rng.normal(size=(3, 2)) + 0.1, rng.normal(size=(4, 2)) + 0.1,
                              make_params(2, 2, rng), make_params(2, 2, rng))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gradients_pass_finite_diff(self, seed):
        rng = np.random.default_rng(seed)
        m_i = rng.uniform(-1, 1, size=(4, 3)) + 0.05
        m_j = rng.uniform(-1, 1, size=(4, 3)) + 0.05
        p_i, p_j = make_params(3, 2, rng), make_params(3, 2, rng)

        def loss_fn(params):
            q_i = corrnet.ProjectionParams(params["i.w"], params["i.b"], params["i.b_prime"])
            q_j = corrnet.ProjectionParams(params["j.w"], params["j.b"], params["j.b_prime"])
            return corrnet.loss_word_with_grads(m_i, m_j, q_i, q_j)

        params = {"i.w": p_i.w, "i.b": p_i.b, "i.b_prime": p_i.b_prime,
                  "j.w": p_j.w, "j.b": p_j.b, "j.b_prime": p_j.b_prime}
        report = numerics.finite_diff_check(loss_fn, params, tolerance=1e-4)
        assert report.passed, report.summary()


def test_o_w_decreases_over_fifty_epochs(toy_training_run):
    log = toy_training_run.log
    assert log[-1][1] <= log[0][1]


@pytest.fixture(scope="module")
def toy_training_run():
    from conftest import toy_state

    resources, config = toy_state(seed=3, vocab=20, dim=4, components="W",
                                  dim_common=3, epochs=50, batch_size=8)
    config.early_stop_patience = 0  # run all 50 epochs
    return trainer.train(resources, config)
