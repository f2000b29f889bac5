import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splinefb.design import DesignConfig, build_filters, design, validate_response
from splinefb.filterbank import legacy_filters
from splinefb.graph import GraphError, comet, normalize, path_graph, random_bipartite, random_sensor, ring
from splinefb.sampling import (
    NotBipartiteError,
    RankDeficiencyError,
    SamplingPattern,
    bipartite_natural_partition,
    independent_rows,
    partition_search,
    polarity_assign,
    random_assign,
    rank_conditions,
    sigma_min_diagnostic,
)
from splinefb.spectral import eigendecompose


def spectrum(g):
    return eigendecompose(normalize(g))


def greedy_rows(m, k):
    """Oracle: first k rows, in order, that raise the numerical rank."""
    chosen = []
    for i in range(m.shape[0]):
        if np.linalg.matrix_rank(m[chosen + [i]], tol=1e-9) > len(chosen):
            chosen.append(i)
        if len(chosen) == k:
            break
    return chosen


class TestSamplingPattern:
    def test_k_and_mask(self):
        pat = SamplingPattern([2, 0], [1], 3)
        np.testing.assert_array_equal(pat.set_a, [0, 2])
        np.testing.assert_array_equal(pat.k_diag, [1, -1, 1])
        np.testing.assert_array_equal(pat.mask_a, [True, False, True])
        assert SamplingPattern.from_k(pat.k_diag).set_b.tolist() == [1]

    def test_json_round_trip(self):
        pat = SamplingPattern([0, 3], [1, 2], 4)
        back = SamplingPattern.from_json(pat.to_json())
        assert back.set_a.tolist() == [0, 3] and back.set_b.tolist() == [1, 2]

    def test_overlap(self):
        with pytest.raises(ValueError, match="overlap"):
            SamplingPattern([0, 1], [1], 2)

    def test_not_covering(self):
        with pytest.raises(ValueError, match="partition"):
            SamplingPattern([0], [1], 3)


class TestIndependentRows:
    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(3, 12), k=st.integers(1, 4))
    def test_matches_greedy_oracle(self, seed, n, k):
        rng = np.random.default_rng(seed)
        k = min(k, n)
        m = rng.standard_normal((n, k))
        # force some dependent rows
        dup = rng.integers(0, n, size=n // 3)
        m[dup] = 0.0
        if n > 2:
            m[1] = 2.0 * m[0]
        assert independent_rows(m, k) == greedy_rows(m, k)

    def test_zero_matrix(self):
        assert independent_rows(np.zeros((4, 2)), 2) == []


class TestPartitionSearch:
    def test_p3_polarity(self, p3):
        pat = partition_search(spectrum(p3), 1, 1, "polarity")
        assert pat.set_a.tolist() == [0, 2] and pat.set_b.tolist() == [1]

    def test_k2_tight(self, k2):
        pat = partition_search(spectrum(k2), 1, 1, "polarity")
        assert pat.set_a.tolist() == [0] and pat.set_b.tolist() == [1]
        sa, sb = rank_conditions(spectrum(k2), pat, 1, 1)
        assert sa > 1e-8 and sb > 1e-8

    @pytest.mark.parametrize("strategy", ["polarity", "random"])
    @pytest.mark.parametrize("g", [ring(16), comet(32), random_sensor(60, seed=1), random_bipartite(8, 20, seed=2)],
                             ids=["ring", "comet", "sensor", "bipartite"])
    def test_rank_postcondition(self, g, strategy):
        sd = spectrum(g)
        for r, s in [(1, 1), (2, 3)]:
            pat = partition_search(sd, r, s, strategy, seed=4)
            sa, sb = rank_conditions(sd, pat, r, s)
            # singular-value oracle computed independently
            u = sd.u
            oa = np.linalg.svd(u[np.ix_(pat.set_a, range(r))], compute_uv=False).min()
            ob = np.linalg.svd(u[np.ix_(pat.set_b, range(g.n - s, g.n))], compute_uv=False).min()
            assert min(oa, ob) > 1e-8 and np.isclose(sa, oa) and np.isclose(sb, ob)
            assert pat.set_a.size >= r and pat.set_b.size >= s

    def test_random_is_seeded(self):
        sd = spectrum(random_sensor(50, seed=3))
        a = partition_search(sd, 1, 1, "random", seed=11)
        b = partition_search(sd, 1, 1, "random", seed=11)
        assert a.set_a.tolist() == b.set_a.tolist()

    def test_polarity_follows_sign(self):
        sd = spectrum(ring(20))
        pat = partition_search(sd, 1, 1, "polarity")
        u_last = sd.u[:, -1]
        # on an even ring the polarity split is the bipartition
        assert np.all(u_last[pat.set_a] >= 0) and np.all(u_last[pat.set_b] < 0)

    def test_too_large(self, p3):
        with pytest.raises(RankDeficiencyError) as info:
            partition_search(spectrum(p3), 2, 2)
        assert info.value.stage == "size"

    def test_unknown_strategy(self, p3):
        with pytest.raises(ValueError, match="unknown strategy"):
            partition_search(spectrum(p3), 1, 1, "greedy")

    def test_invertible_when_conditions_hold(self):
        for seed in range(5):
            g = random_sensor(60, seed=seed)
            ng = normalize(g)
            sd = eigendecompose(ng)
            fd = design(sd, DesignConfig(1, 1, 3, 0.5))
            assert validate_response(fd.gamma, fd.r_eff, fd.s_eff)
            pair = build_filters(ng, sd, fd)
            pat = partition_search(sd, fd.r_eff, fd.s_eff)
            smin, bound = sigma_min_diagnostic(pat.k_diag, pair.g)
            assert smin > 0 and np.isfinite(bound)


class TestAssignment:
    def test_polarity_example(self):
        assert polarity_assign([0.5, -0.7, 0.5], [2]) == ([2], [])

    def test_zero_goes_to_a(self):
        assert polarity_assign([0.0, -1.0], [0, 1]) == ([0], [1])

    def test_empty(self):
        assert polarity_assign([1.0, -1.0], []) == ([], [])

    @settings(max_examples=40, deadline=None)
    @given(st.sets(st.integers(0, 100), max_size=30), st.integers(0, 1000))
    def test_random_balanced(self, rest, seed):
        a, b = random_assign(rest, np.random.default_rng(seed))
        assert abs(len(a) - len(b)) <= 1
        assert set(a) | set(b) == rest and not set(a) & set(b)


class TestNaturalPartition:
    def test_c4(self, c4):
        pat, max_rs = bipartite_natural_partition(c4)
        assert pat.set_a.tolist() == [0, 2] and pat.set_b.tolist() == [1, 3]
        assert max_rs == 1

    def test_k2(self, k2):
        pat, max_rs = bipartite_natural_partition(k2)
        assert pat.set_a.tolist() == [0] and pat.set_b.tolist() == [1] and max_rs == 1

    def test_triangle(self, c3):
        with pytest.raises(NotBipartiteError):
            bipartite_natural_partition(c3)

    def test_rank_conditions_exhaustive_small(self):
        graphs = [ring(n) for n in (4, 6, 8, 10, 12)] + [path_graph(n) for n in range(2, 13)]
        for seed in range(60):
            na, nb = 1 + seed % 5, 1 + (seed // 5) % 7
            try:
                graphs.append(random_bipartite(na, nb, 0.6, seed=seed))
            except GraphError:
                continue
        for g in graphs:
            sd = spectrum(g)
            pat, max_rs = bipartite_natural_partition(g)
            for r in range(1, max_rs + 1):
                for s in range(1, max_rs + 1):
                    sa, sb = rank_conditions(sd, pat, r, s)
                    assert sa > 1e-8 and sb > 1e-8, (g.n, r, s)

    def test_rejects_too_few_rows(self, p3):
        # B = {1} cannot host two independent highpass rows
        with pytest.raises(RankDeficiencyError):
            bipartite_natural_partition(p3, r=1, s=2)


class TestSigmaMin:
    def test_k2_explicit(self, k2):
        g = np.array([[0.0, 1.0], [1.0, 0.0]])
        smin, bound = sigma_min_diagnostic([1, -1], g)
        assert smin == pytest.approx(np.sqrt(2), abs=1e-14)
        assert bound == pytest.approx(np.sqrt(2), abs=1e-14)
        m = np.eye(2) + np.diag([1, -1]) @ g
        np.testing.assert_array_equal(m, [[1, 1], [-1, 1]])

    @pytest.mark.parametrize("g", [ring(4), ring(10), path_graph(5), random_bipartite(4, 6, seed=1)])
    def test_legacy_identity_singular(self, g):
        pair = legacy_filters(g)
        smin, bound = sigma_min_diagnostic(np.ones(g.n), pair.g)
        assert smin <= 1e-10 and bound == np.inf

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            sigma_min_diagnostic(np.ones(3), np.eye(2))

    def test_polarity_beats_random_small_ensemble(self):
        cfg = DesignConfig(1, 1, 3, 0.5)
        means = {"polarity": [], "random": []}
        for seed in range(20):
            ng = normalize(random_sensor(100, seed=seed))
            sd = eigendecompose(ng)
            fd = design(sd, cfg)
            pair = build_filters(ng, sd, fd)
            for strat in means:
                pat = partition_search(sd, fd.r_eff, fd.s_eff, strat, seed=seed)
                means[strat].append(sigma_min_diagnostic(pat.k_diag, pair.g)[0])
        assert np.mean(means["polarity"]) > np.mean(means["random"])
