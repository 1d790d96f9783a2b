import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ggbm import norms, pathgen
from ggbm.errors import DomainError
from ggbm.norms import L2, SUP, NormKind, Provenance, holder, parse_norm

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
paths = st.integers(2, 40).flatmap(lambda n: arrays(np.float64, n, elements=finite))


def brute_holder(v, gamma):
    n = v.size - 1
    best = 0.0
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            best = max(best, abs(v[j] - v[i]) / ((j - i) / n) ** gamma)
    return best


class TestExamples:
    t = np.linspace(0.0, 1.0, 1025)

    def test_sup(self):
        assert norms.sup_norm(self.t) == 1.0
        assert norms.sup_norm(np.zeros(9)) == 0.0
        assert norms.sup_norm(-2 * self.t + 1) == 1.0

    def test_holder(self):
        assert math.isclose(norms.holder_norm(self.t, 0.5), 1.0, rel_tol=1e-14)
        assert norms.holder_norm(np.zeros(9), 0.3) == 0.0
        assert norms.holder_norm(np.array([0.0, 0.5, 1.0]), 0.25) == 1.0

    def test_l2(self):
        assert norms.l2_norm(np.ones(11)) == 1.0
        assert norms.l2_norm(np.zeros(11)) == 0.0
        assert abs(norms.l2_norm(np.linspace(0, 1, 1024)) - math.sqrt(1 / 3)) < 1e-5

    def test_theta(self):
        assert norms.theta_for(SUP, 0.5) == 2.0
        assert norms.theta_for(SUP, 0.25) == 4.0
        assert math.isclose(norms.theta_for(holder(0.1), 0.3), 5.0)
        assert norms.theta_for(L2, 0.4) == 2.5

    def test_provenance(self):
        assert SUP.theta_provenance is Provenance.PAPER
        assert L2.theta_provenance is Provenance.LITERATURE
        assert holder(0.2).theta_provenance is Provenance.LITERATURE

    def test_holder_needs_gamma_below_hurst(self):
        with pytest.raises(DomainError):
            norms.theta_for(holder(0.3), 0.2)
        with pytest.raises(DomainError):
            holder(0.3).check_process(0.3)

    def test_stack_matches_rows(self):
        v = np.random.default_rng(0).normal(size=(5, 33))
        for spec in [SUP, L2, holder(0.3)]:
            stacked = spec(v)
            assert stacked.shape == (5,)
            assert np.array_equal(stacked, [spec(r) for r in v])


class TestParse:
    def test_names(self):
        assert parse_norm("sup") is SUP
        assert parse_norm("L2") is L2
        h = parse_norm("holder:0.25")
        assert h.kind is NormKind.HOLDER and h.gamma == 0.25 and h.name == "holder:0.25"

    @pytest.mark.parametrize("text", ["max", "holder:", "holder:x", "holder:1.5", "holder:0"])
    def test_rejects(self, text):
        with pytest.raises(DomainError):
            parse_norm(text)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(paths, st.floats(-50, 50, allow_nan=False))
    def test_homogeneity(self, v, c):
        for spec in [SUP, L2, holder(0.35)]:
            assert math.isclose(spec(c * v), abs(c) * spec(v), rel_tol=1e-12, abs_tol=1e-300)

    @settings(max_examples=60, deadline=None)
    @given(paths)
    def test_holder_matches_brute_force(self, v):
        for g in (0.1, 0.7):
            assert math.isclose(norms.holder_norm(v, g), brute_holder(v, g), rel_tol=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(paths, st.floats(0.05, 0.5), st.floats(0.5, 0.95))
    def test_holder_monotone_in_gamma(self, v, g_lo, g_hi):
        assert norms.holder_norm(v, g_hi) >= norms.holder_norm(v, g_lo)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 6).flatmap(
        lambda k: arrays(np.float64, 2**k * 3 + 1, elements=finite)))
    def test_sup_monotone_under_refinement(self, v):
        assert norms.sup_norm(v[::3]) <= norms.sup_norm(v)
        assert norms.sup_norm(v[::2]) <= norms.sup_norm(v)

    @settings(max_examples=60, deadline=None)
    @given(paths)
    def test_nonnegative(self, v):
        for spec in [SUP, L2, holder(0.5)]:
            assert spec(v) >= 0


class TestDiscretization:
    def test_mean_sup_grows_with_resolution(self):
        g = pathgen.fbm_sample(0.5, 1024, 20_000, pathgen.RngStream(3))
        fine = norms.sup_norm(g.values)
        coarse = norms.sup_norm(g.values[:, ::4])
        assert coarse.mean() < fine.mean()
        assert np.all(coarse <= fine)
        # independent coarse sample, same statement without sharing paths
        g2 = pathgen.fbm_sample(0.5, 256, 20_000, pathgen.RngStream(4))
        s2 = norms.sup_norm(g2.values)
        se = math.hypot(fine.std(), s2.std()) / math.sqrt(20_000)
        assert fine.mean() - s2.mean() > 3 * se


class TestDomain:
    def test_single_point_rejected(self):
        with pytest.raises(DomainError):
            norms.l2_norm(np.zeros(1))
        with pytest.raises(DomainError):
            norms.holder_norm(np.zeros(1), 0.5)

    def test_bad_rank(self):
        with pytest.raises(DomainError):
            norms.sup_norm(np.zeros((2, 2, 2)))
