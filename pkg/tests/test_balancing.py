"""Weight extraction, effective sample size, and the balance checker."""

import numpy as np
import pytest

from nbw.balancing import (
    BalancingWeights,
    check_balance,
    compute_weights,
    effective_sample_size,
    load_weights,
    save_weights,
)
from nbw.errors import ConfigError, DivergenceSignal, ParseError
from nbw.net import init_net, set_params
from nbw.synthdata import GaussianSpec, gaussian_layout, gen_gaussian
from nbw.trainer import TrainConfig, train

LAYOUT2 = gaussian_layout(2)


def constant_critic(dim, value):
    net = init_net((dim, 1), seed=0)
    set_params(net, np.zeros(net.n_params))
    net.biases[-1][0] = value
    return net


class TestComputeWeights:
    def test_constant_critic_gives_unit_weights(self):
        data = gen_gaussian(GaussianSpec(2, 0.5), 50, 0)
        for c in (-3.0, 0.0, 2.5):
            w = compute_weights(constant_critic(2, c), data, LAYOUT2)
            np.testing.assert_allclose(w.values, 1.0, atol=1e-12)

    def test_mean_is_one(self):
        data = gen_gaussian(GaussianSpec(2, 0.5), 200, 1)
        net = init_net((2, 8, 1), seed=5)
        w = compute_weights(net, data, LAYOUT2)
        assert abs(w.values.mean() - 1.0) <= 1e-12
        assert (w.values >= 0).all()

    def test_invariant_to_critic_shift(self):
        data = gen_gaussian(GaussianSpec(2, 0.5), 100, 2)
        net = init_net((2, 8, 1), seed=6)
        w_before = compute_weights(net, data, LAYOUT2).values
        shifted = net.clone()
        shifted.biases[-1][0] += 12.3
        w_after = compute_weights(shifted, data, LAYOUT2).values
        np.testing.assert_allclose(w_before, w_after, atol=1e-12)

    def test_overflow_signals(self):
        data = gen_gaussian(GaussianSpec(2, 0.5), 10, 3)
        with pytest.raises(DivergenceSignal):
            compute_weights(constant_critic(2, -800.0), data, LAYOUT2)

    def test_dimension_mismatch(self):
        data = gen_gaussian(GaussianSpec(3, 0.0), 10, 4)
        with pytest.raises(ConfigError):
            compute_weights(constant_critic(2, 0.0), data)

    def test_records_provenance(self):
        data = gen_gaussian(GaussianSpec(2, 0.5), 20, 5)
        net = init_net((2, 4, 1), seed=7)
        w = compute_weights(net, data, LAYOUT2)
        assert w.source_model == net.param_hash()
        assert w.normalizer > 0


class TestWeightVectorRules:
    def test_rejects_negative(self):
        with pytest.raises(ConfigError):
            BalancingWeights(values=np.array([1.5, -0.5]))

    def test_rejects_wrong_mean(self):
        with pytest.raises(ConfigError):
            BalancingWeights(values=np.array([1.0, 3.0]))


class TestEffectiveSampleSize:
    def test_uniform_is_n(self):
        assert effective_sample_size(np.ones(37)) == pytest.approx(37.0)

    def test_single_mass_is_one(self):
        w = np.zeros(10)
        w[0] = 10.0
        assert effective_sample_size(w) == pytest.approx(1.0)

    def test_two_point_case(self):
        assert effective_sample_size(np.array([2.0, 0.0])) == pytest.approx(1.0)


class TestWeightsCsv:
    def test_round_trip(self, tmp_path):
        w = BalancingWeights(values=np.array([0.5, 1.5, 1.0]))
        path = tmp_path / "w.csv"
        save_weights(w, str(path))
        back = load_weights(str(path))
        np.testing.assert_allclose(back.values, w.values, atol=1e-15)
        assert path.read_text().splitlines()[0] == "weight"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text("wt\n1.0\n")
        with pytest.raises(ParseError):
            load_weights(str(path))

    def test_missing_file(self):
        with pytest.raises(ParseError):
            load_weights("/no/such/file.csv")


class TestCheckBalance:
    def checker_cfg(self, **overrides):
        base = dict(alpha=0.5, epochs=8, batch_size=250, hidden=(16, 16), seed=11, eval_every=1)
        base.update(overrides)
        return TrainConfig(**base)

    def test_unit_weights_reduce_to_plain_estimator(self):
        # with unit weights the weighted run is the plain one, so both
        # reported values must be bitwise identical
        tr = gen_gaussian(GaussianSpec(2, 0.8), 400, 21)
        te = gen_gaussian(GaussianSpec(2, 0.8), 400, 22)
        report = check_balance(tr, te, LAYOUT2, np.ones(400), self.checker_cfg())
        assert report.i_alpha_weighted == report.i_alpha_uniform

    def test_report_value_is_max_of_trace(self):
        tr = gen_gaussian(GaussianSpec(2, 0.8), 400, 23)
        te = gen_gaussian(GaussianSpec(2, 0.8), 400, 24)
        report = check_balance(tr, te, LAYOUT2, np.ones(400), self.checker_cfg())
        assert report.i_alpha_weighted >= max(r.test_estimate for r in report.trace.records) - 1e-15
        assert report.ess == pytest.approx(400.0)
        assert report.max_weight >= 1.0

    def test_near_zero_for_unit_weights_on_product_data(self):
        # independent columns: the plain information is zero up to noise
        tr = gen_gaussian(GaussianSpec(2, 0.0), 1000, 25)
        te = gen_gaussian(GaussianSpec(2, 0.0), 1000, 26)
        report = check_balance(tr, te, LAYOUT2, np.ones(1000), self.checker_cfg(epochs=5))
        assert abs(report.i_alpha_uniform) < 0.05

    def test_weight_length_mismatch(self):
        tr = gen_gaussian(GaussianSpec(2, 0.5), 100, 27)
        with pytest.raises(ConfigError):
            check_balance(tr, tr, LAYOUT2, np.ones(99), self.checker_cfg())

    def test_nonuniform_weights_with_size_mismatch_need_test_weights(self):
        tr = gen_gaussian(GaussianSpec(2, 0.5), 100, 28)
        te = gen_gaussian(GaussianSpec(2, 0.5), 60, 29)
        w = np.full(100, 1.0)
        w[0], w[1] = 0.2, 1.8
        with pytest.raises(ConfigError, match="test_weights"):
            check_balance(tr, te, LAYOUT2, w, self.checker_cfg())
        report = check_balance(
            tr, te, LAYOUT2, w, self.checker_cfg(epochs=2), test_weights=np.ones(60)
        )
        assert np.isfinite(report.i_alpha_weighted)

    def test_report_json_shape(self):
        tr = gen_gaussian(GaussianSpec(2, 0.5), 200, 30)
        te = gen_gaussian(GaussianSpec(2, 0.5), 200, 31)
        report = check_balance(tr, te, LAYOUT2, np.ones(200), self.checker_cfg(epochs=2))
        import json

        payload = json.loads(report.to_json())
        assert set(payload) == {"i_alpha_weighted", "i_alpha_uniform", "ess", "max_weight", "trace"}
        assert payload["trace"]["records"]


@pytest.mark.slow
def test_good_weights_reduce_information():
    # weights from a trained critic should leave less detectable dependence
    # than unit weights on correlated data, for most seeds; the unit-weight
    # runs double as information estimates that should sit near the truth
    from concurrent.futures import ThreadPoolExecutor

    from nbw.oracle import alpha_information

    layout = LAYOUT2

    def one_seed(seed):
        tr = gen_gaussian(GaussianSpec(2, 0.8), 5000, 1000 + seed)
        te = gen_gaussian(GaussianSpec(2, 0.8), 5000, 2000 + seed)
        nbw_cfg = TrainConfig(
            alpha=0.5, epochs=40, batch_size=2500, hidden=(100, 100, 100),
            seed=seed, test_data=te, eval_every=2,
        )
        net, _ = train(tr, layout, nbw_cfg)
        report = check_balance(
            tr, te, layout,
            compute_weights(net, tr, layout),
            TrainConfig(alpha=0.5, epochs=30, batch_size=2500, hidden=(100, 100, 100),
                        seed=seed, eval_every=2),
            test_weights=compute_weights(net, te, layout),
        )
        return report.i_alpha_weighted, report.i_alpha_uniform

    with ThreadPoolExecutor(max_workers=2) as pool:
        results = list(pool.map(one_seed, range(20)))

    wins = sum(w < u for w, u in results)
    assert wins >= 16  # at least 80% of 20 seeds

    oracle = alpha_information(2, 0.8, 0.5)
    median_uniform = sorted(u for _, u in results)[10]
    assert 0.75 * oracle <= median_uniform <= 1.25 * oracle
