"""Tests for the KnnConverter service."""

import time

import numpy as np
import pytest

from src.models.target_pool import ConversionConfig, SelectionPolicy
from src.models.utterance import Gender
from src.services.knn_converter import KnnConverter
from src.utils.errors import DimensionError, InsufficientDataError, PolicyError

from .conftest import frames, make_record


def _pool(array, speaker="t1", gender=Gender.M):
    return KnnConverter.build_pool(speaker, gender, [frames(array)])


def _brute_force(src, pool_frames, k):
    """Sort every pool row by (-cosine, index) and take the first k."""
    unit_pool = pool_frames.astype(np.float64)
    unit_pool /= np.linalg.norm(unit_pool, axis=1, keepdims=True)
    out = []
    for q in src.astype(np.float64):
        sims = unit_pool @ (q / np.linalg.norm(q))
        order = np.lexsort((np.arange(sims.size), -sims))
        out.append(order[:k])
    return np.array(out)


class TestNeighbors:
    """Tests for nearest-neighbor selection."""

    def test_matches_brute_force_sort(self):
        """Selected indices should equal a full sort on random instances."""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            t, n, d = rng.integers(1, 33), rng.integers(1, 257), rng.integers(1, 17)
            k = int(rng.integers(1, min(n, 8) + 1))
            src = rng.standard_normal((t, d)).astype(np.float32)
            pool_frames = rng.standard_normal((n, d)).astype(np.float32)
            pool = _pool(pool_frames)
            got = KnnConverter.neighbors(frames(src), pool, k)
            np.testing.assert_array_equal(got, _brute_force(src, pool_frames, k))

    def test_converted_frames_are_neighbor_means(self):
        """Each output row should be the mean of its selected pool rows."""
        rng = np.random.default_rng(3)
        src = rng.standard_normal((20, 6))
        pool_frames = rng.standard_normal((50, 6)).astype(np.float32)
        result = KnnConverter.convert_detailed(frames(src), _pool(pool_frames), 4)
        expected = pool_frames[result.indices].astype(np.float64).mean(axis=1)
        np.testing.assert_allclose(result.matrix.frames, expected, rtol=1e-6)
        assert result.passthrough_rows == 0

    def test_ties_broken_by_lower_index(self):
        """Equal similarities should prefer the lower pool row."""
        pool = _pool([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [2.0, 0.0]])
        src = frames([[3.0, 0.0]])
        assert KnnConverter.neighbors(src, pool, 2).tolist() == [[0, 2]]
        assert KnnConverter.neighbors(src, pool, 3).tolist() == [[0, 2, 3]]

    def test_source_scale_invariance(self):
        """Scaling source rows by a positive factor should not change the selection."""
        rng = np.random.default_rng(11)
        src = rng.standard_normal((10, 4))
        pool = _pool(rng.standard_normal((40, 4)))
        base = KnnConverter.neighbors(frames(src), pool, 4)
        np.testing.assert_array_equal(KnnConverter.neighbors(frames(src * 4.0), pool, 4), base)

    def test_identity_pool_k1(self):
        """Converting against a pool made of the source with k=1 should be exact."""
        rng = np.random.default_rng(5)
        src = frames(rng.standard_normal((30, 8)))
        assert KnnConverter.convert(src, _pool(src.frames), 1) == src

    def test_k_equals_pool_size_gives_pool_mean(self):
        """With k = N every output row should be the pool mean."""
        rng = np.random.default_rng(9)
        pool_frames = rng.standard_normal((5, 3)).astype(np.float32)
        out = KnnConverter.convert(frames(rng.standard_normal((4, 3))), _pool(pool_frames), 5)
        expected = np.tile(pool_frames.astype(np.float64).mean(axis=0), (4, 1))
        np.testing.assert_allclose(out.frames, expected, rtol=1e-6)

    def test_output_shape_and_hop_preserved(self):
        """Conversion should keep T, D and hop_s."""
        src = frames(np.ones((7, 3)), hop_s=0.0125)
        out = KnnConverter.convert(src, _pool(np.eye(3)), 2)
        assert out.frames.shape == (7, 3)
        assert out.hop_s == 0.0125

    def test_zero_norm_source_rows_pass_through(self):
        """All-zero source frames should be copied unchanged and counted."""
        src = frames([[0.0, 0.0], [1.0, 0.0]])
        result = KnnConverter.convert_detailed(src, _pool([[1.0, 1.0], [2.0, 0.0]]), 1)
        assert result.passthrough_rows == 1
        assert result.indices.tolist() == [[-1], [1]]
        np.testing.assert_array_equal(result.matrix.frames, [[0.0, 0.0], [2.0, 0.0]])

    def test_k_larger_than_pool(self):
        """k > N should raise InsufficientDataError."""
        with pytest.raises(InsufficientDataError):
            KnnConverter.convert(frames(np.ones((2, 2))), _pool(np.eye(2)), 3)

    def test_dimension_mismatch(self):
        """Source and pool must agree on D."""
        with pytest.raises(DimensionError):
            KnnConverter.convert(frames(np.ones((2, 3))), _pool(np.eye(2)), 1)

    def test_resynthesis_is_identity(self):
        """The resynthesis ablation should return the source unchanged."""
        src = frames(np.arange(6).reshape(3, 2))
        assert KnnConverter.resynthesis_passthrough(src) == src

    @pytest.mark.slow
    def test_throughput(self):
        """3000 source frames against an 80000-row, 64-dim pool should convert within 10 s."""
        rng = np.random.default_rng(13)
        src = frames(rng.standard_normal((3000, 64)).astype(np.float32))
        pool = _pool(rng.standard_normal((80000, 64)).astype(np.float32))
        start = time.perf_counter()
        out = KnnConverter.convert(src, pool, 4)
        assert time.perf_counter() - start <= 10.0
        assert out.frames.shape == (3000, 64)


class TestBuildPool:
    """Tests for pool construction."""

    def test_zero_rows_dropped_and_counted(self):
        """Zero-norm rows should be removed from the pool."""
        pool = KnnConverter.build_pool("t", Gender.F, [frames([[0, 0], [1, 2]]), frames([[0, 0], [3, 4]])])
        assert pool.size == 2
        assert pool.dropped_rows == 2
        np.testing.assert_allclose(pool.norms, [np.sqrt(5), 5.0])

    def test_all_zero_pool_rejected(self):
        """A pool with no usable rows should raise."""
        with pytest.raises(InsufficientDataError):
            KnnConverter.build_pool("t", Gender.F, [frames(np.zeros((3, 2)))])

    def test_mismatched_dimensions_rejected(self):
        """Matrices of different D cannot share a pool."""
        with pytest.raises(DimensionError):
            KnnConverter.build_pool("t", Gender.F, [frames(np.ones((2, 2))), frames(np.ones((2, 3)))])

    def test_pool_is_read_only(self):
        """Pool arrays should not be writable."""
        pool = _pool(np.eye(3))
        with pytest.raises(ValueError):
            pool.frames[0, 0] = 5.0


class TestSelectTarget:
    """Tests for target-speaker selection."""

    @pytest.fixture
    def candidates(self):
        """Two male and two female target pools."""
        return [
            _pool(np.eye(2), "m1", Gender.M),
            _pool(np.eye(2), "m2", Gender.M),
            _pool(np.eye(2), "f1", Gender.F),
            _pool(np.eye(2), "f2", Gender.F),
        ]

    def test_same_gender(self, candidates):
        """same_gender should only choose pools of the source gender."""
        cfg = ConversionConfig(seed=3)
        for i in range(20):
            record = make_record(f"u{i}", "s", gender=Gender.F)
            assert KnnConverter.select_target(record, candidates, cfg).gender is Gender.F

    def test_cross_gender(self, candidates):
        """cross_gender should only choose pools of the other gender."""
        cfg = ConversionConfig(policy=SelectionPolicy.CROSS_GENDER)
        for i in range(20):
            record = make_record(f"u{i}", "s", gender=Gender.M)
            assert KnnConverter.select_target(record, candidates, cfg).gender is Gender.F

    def test_unconstrained_reaches_every_pool(self, candidates):
        """unconstrained selection should eventually pick each candidate."""
        cfg = ConversionConfig(policy="unconstrained", seed=1)
        picked = {KnnConverter.select_target(make_record(f"u{i}", "s"), candidates, cfg).speaker
                  for i in range(200)}
        assert picked == {"m1", "m2", "f1", "f2"}

    def test_deterministic_per_seed_and_id(self, candidates):
        """The same (seed, id) should always pick the same target."""
        record = make_record("utt-42", "s")
        cfg = ConversionConfig(seed=17)
        first = KnnConverter.select_target(record, candidates, cfg).speaker
        assert all(KnnConverter.select_target(record, candidates, cfg).speaker == first for _ in range(5))

    def test_no_eligible_candidate(self):
        """No pool matching the policy should raise PolicyError."""
        record = make_record("u", "s", gender=Gender.F)
        with pytest.raises(PolicyError):
            KnnConverter.select_target(record, [_pool(np.eye(2), "m1", Gender.M)], ConversionConfig())
