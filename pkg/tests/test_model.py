import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_model
from wgelab.dataset import GROUPS, GroupKey
from wgelab.errors import InvalidModel, NotSPD
from wgelab.model import (
    GaussianGroupModel,
    check_orthogonality,
    delta_bar,
    delta_bar_direct,
    group_mean,
    mahalanobis_norms,
    sample_dataset,
)


def test_group_means(ref):
    np.testing.assert_array_equal(group_mean(ref, (0, "T")), [0.0, 0.0])
    np.testing.assert_array_equal(group_mean(ref, (1, "S")), [-0.25, 0.0])
    np.testing.assert_array_equal(group_mean(ref, (0, "S")), [0.0, 0.25])
    np.testing.assert_array_equal(group_mean(ref, (1, "T")), [-0.25, -0.25])


def test_parallelogram(rng):
    m = random_model(rng)
    mu = m.means()
    np.testing.assert_allclose(mu[1, "S"] - mu[0, "S"], m.delta_d, atol=1e-14)
    np.testing.assert_allclose(mu[1, "T"] - mu[0, "T"], m.delta_d, atol=1e-14)
    for y in (0, 1):
        np.testing.assert_allclose(mu[y, "S"] - mu[y, "T"], m.delta_c, atol=1e-14)


@pytest.mark.parametrize("pi0", [0.01, 1 / 64, 0.1, 0.25])
def test_priors(ref, pi0):
    m = ref.with_pi0(pi0)
    pri = m.priors()
    assert sum(pri.values()) == pytest.approx(1.0, abs=1e-15)
    assert pri[0, "T"] + pri[0, "S"] == pytest.approx(0.5)
    assert pri[1, "T"] + pri[1, "S"] == pytest.approx(0.5)
    assert pri[0, "T"] == pri[1, "S"] == pi0


class TestDeltaBar:
    def test_balanced(self, ref):
        np.testing.assert_allclose(delta_bar(ref.with_pi0(0.25)), ref.delta_d)

    def test_reference(self, ref):
        np.testing.assert_allclose(delta_bar(ref), [-0.25, -0.484375], rtol=1e-15)

    def test_zero_dc(self, ref):
        m = ref.replace(delta_c=[0.0, 0.0])
        np.testing.assert_array_equal(delta_bar(m), m.delta_d)

    def test_cross_check(self, rng):
        for _ in range(50):
            m = random_model(rng)
            np.testing.assert_allclose(delta_bar(m), delta_bar_direct(m), atol=1e-12)


class TestNorms:
    def test_reference(self, ref):
        t = mahalanobis_norms(ref)
        assert t.norm_dd_sq == pytest.approx(31.25, rel=1e-12)
        assert t.norm_dc_sq == pytest.approx(62.5, rel=1e-12)
        assert t.cross == pytest.approx(0.0, abs=1e-10)
        # 0.9375 / (1 + 2 (1/64)(1 - 2/64) 62.5)
        assert t.c_tilde == pytest.approx(0.9375 / (1 + 0.03125 * 0.96875 * 62.5), rel=1e-12)
        assert t.c_tilde == pytest.approx(0.32416, abs=1e-5)

    def test_balanced_c_tilde(self, ref):
        assert mahalanobis_norms(ref.with_pi0(0.25)).c_tilde == 0.0

    def test_nonnegative(self, rng):
        for _ in range(30):
            t = mahalanobis_norms(random_model(rng))
            assert t.norm_dc_sq >= 0 and t.norm_dd_sq >= 0 and t.c_tilde >= 0


class TestOrthogonality:
    def test_reference(self, ref):
        assert check_orthogonality(ref)

    def test_parallel(self):
        m = GaussianGroupModel([0, 0], [1, 1], [1, 1], np.eye(2), 0.1)
        assert not check_orthogonality(m)

    def test_zero_dc(self, ref):
        assert check_orthogonality(ref.replace(delta_c=[0.0, 0.0]))

    def test_generated(self, rng):
        for _ in range(20):
            assert check_orthogonality(random_model(rng, orthogonal=True))


class TestValidation:
    @pytest.mark.parametrize("pi0", [0.0, -0.1, 0.2500001, 0.5])
    def test_pi0_range(self, ref, pi0):
        with pytest.raises(InvalidModel):
            ref.with_pi0(pi0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidModel):
            GaussianGroupModel([0, 0], [1, 0, 0], [0, 1], np.eye(2), 0.1)
        with pytest.raises(InvalidModel):
            GaussianGroupModel([0, 0], [1, 0], [0, 1], np.eye(3), 0.1)

    def test_not_spd(self):
        with pytest.raises(NotSPD):
            GaussianGroupModel([0, 0], [1, 0], [0, 1], [[1, 2], [2, 1]], 0.1)

    def test_from_means(self, ref):
        m = GaussianGroupModel.from_means(ref.means(), ref.sigma, ref.pi0)
        for name in ("mu_base", "delta_c", "delta_d"):
            np.testing.assert_allclose(getattr(m, name), getattr(ref, name), atol=1e-15)

    def test_from_means_rejects_non_parallelogram(self, ref):
        means = ref.means()
        means[GroupKey(1, "S")] = means[GroupKey(1, "S")] + [1e-6, 0.0]
        with pytest.raises(InvalidModel):
            GaussianGroupModel.from_means(means, ref.sigma, ref.pi0)


class TestJson:
    def test_schema(self, ref):
        doc = json.loads(ref.to_json())
        assert set(doc) == {"dim", "mu_base", "delta_c", "delta_d", "sigma", "pi0"}
        assert doc["sigma"] == [0.002, 0.002, 0.002, 0.003]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_lossless_round_trip(self, seed):
        m = random_model(np.random.default_rng(seed))
        back = GaussianGroupModel.from_json(m.to_json())
        for name in ("mu_base", "delta_c", "delta_d"):
            assert np.array_equal(getattr(back, name), getattr(m, name))
        assert np.array_equal(back.sigma.matrix, m.sigma.matrix)
        assert back.pi0 == m.pi0

    def test_missing_key(self):
        with pytest.raises(InvalidModel):
            GaussianGroupModel.from_json('{"dim": 2}')

    def test_bad_json(self):
        with pytest.raises(InvalidModel):
            GaussianGroupModel.from_json("{not json")


class TestSampling:
    def test_minority_counts(self, ref):
        n = 10**5
        ds = sample_dataset(ref, n, seed=11)
        tol = 4 * np.sqrt(n * ref.pi0 * (1 - ref.pi0))
        for g in (GroupKey(0, "T"), GroupKey(1, "S")):
            assert abs(ds.group_counts[g] - n * ref.pi0) <= tol
        assert sum(ds.group_counts.values()) == n

    def test_single_sample(self, ref):
        ds = sample_dataset(ref, 1, seed=0)
        assert ds.n == 1 and ds.x.shape == (1, 2)

    def test_group_means(self, ref):
        ds = sample_dataset(ref, 10**5, seed=12)
        sd = np.sqrt(np.diag(ref.sigma.matrix))
        for g in GROUPS:
            idx = ds.group_indices(g)
            err = np.abs(ds.x[idx].mean(axis=0) - group_mean(ref, g))
            assert np.all(err <= 4 * sd / np.sqrt(idx.size))

    def test_determinism(self, ref):
        a, b = sample_dataset(ref, 500, 3), sample_dataset(ref, 500, 3)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y) and np.array_equal(a.d, b.d)

    def test_group_counts_are_random(self, ref):
        counts = {sample_dataset(ref, 2000, s).group_counts[0, "T"] for s in range(10)}
        assert len(counts) > 1
