"""Tests for the DistortionAnalyzer service."""

import time

import numpy as np
import pandas as pd
import pytest
from scipy.optimize import linprog

from src.services.distortion_analyzer import DistortionAnalyzer
from src.utils.errors import DataError, InsufficientDataError


def _transport_lp(a, b):
    """Exact optimal-transport cost between two uniform empirical samples."""
    n, m = len(a), len(b)
    cost = np.abs(np.subtract.outer(a, b)).ravel()
    rows = np.zeros((n, n * m))
    cols = np.zeros((m, n * m))
    for i in range(n):
        rows[i, i * m:(i + 1) * m] = 1.0
    for j in range(m):
        cols[j, j::m] = 1.0
    result = linprog(
        cost,
        A_eq=np.vstack([rows, cols]),
        b_eq=np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)]),
        bounds=(0, None),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    assert result.success
    return result.fun


def _table(data, ids=None):
    frame = pd.DataFrame(data)
    frame.index = ids if ids is not None else [f"u{i}" for i in range(len(frame))]
    return frame


class TestEmd:
    """Tests for the 1-D Earth Mover's Distance."""

    def test_matches_transport_lp(self):
        """EMD should equal the transport linear program on small instances."""
        rng = np.random.default_rng(21)
        for _ in range(1000):
            a = rng.standard_normal(rng.integers(1, 9))
            b = rng.standard_normal(rng.integers(1, 9)) * 2 + 0.5
            assert DistortionAnalyzer.emd_1d(a, b) == pytest.approx(_transport_lp(a, b), abs=1e-9)

    def test_identical_multisets_zero(self, rng):
        """A permutation of the same values should give exactly zero."""
        a = rng.standard_normal(50)
        assert DistortionAnalyzer.emd_1d(a, rng.permutation(a)) == 0.0

    def test_translation(self, rng):
        """Shifting every value by delta should give delta."""
        a = rng.standard_normal(200)
        assert DistortionAnalyzer.emd_1d(a, a + 0.75) == pytest.approx(0.75, abs=1e-12)

    def test_symmetric(self, rng):
        """EMD(a, b) should equal EMD(b, a)."""
        a, b = rng.standard_normal(30), rng.standard_normal(45)
        assert DistortionAnalyzer.emd_1d(a, b) == pytest.approx(DistortionAnalyzer.emd_1d(b, a), abs=1e-15)

    def test_unequal_sizes(self):
        """Point masses at 0 and 1 should be one unit apart."""
        assert DistortionAnalyzer.emd_1d([0.0], [1.0, 1.0, 1.0]) == pytest.approx(1.0)

    def test_empty_side_rejected(self):
        """An empty sample should raise."""
        with pytest.raises(InsufficientDataError):
            DistortionAnalyzer.emd_1d([], [1.0])

    def test_non_finite_rejected(self):
        """NaN values should raise."""
        with pytest.raises(DataError):
            DistortionAnalyzer.emd_1d([np.nan], [1.0])

    def test_triangle_inequality(self):
        """EMD(a, c) should never exceed EMD(a, b) + EMD(b, c)."""
        rng = np.random.default_rng(8)
        for _ in range(200):
            a, b, c = (rng.standard_normal(rng.integers(1, 40)) * rng.uniform(0.1, 3) for _ in range(3))
            direct = DistortionAnalyzer.emd_1d(a, c)
            assert direct <= DistortionAnalyzer.emd_1d(a, b) + DistortionAnalyzer.emd_1d(b, c) + 1e-12

    def test_large_samples_fast(self):
        """Two 10000-value samples should take under 10 ms."""
        rng = np.random.default_rng(4)
        a, b = rng.standard_normal(10000), rng.standard_normal(10000) + 0.3
        timings = []
        for _ in range(5):
            start = time.perf_counter()
            DistortionAnalyzer.emd_1d(a, b)
            timings.append(time.perf_counter() - start)
        assert min(timings) < 0.010


class TestMutualInfo:
    """Tests for the KSG mutual information estimator."""

    def test_gaussian_rho_09(self):
        """Correlated Gaussians should approach -0.5 ln(1 - rho^2)."""
        rng = np.random.default_rng(0)
        rho = 0.9
        x = rng.standard_normal(2000)
        y = rho * x + np.sqrt(1 - rho ** 2) * rng.standard_normal(2000)
        expected = -0.5 * np.log(1 - rho ** 2)
        assert DistortionAnalyzer.mutual_info(x, y) == pytest.approx(expected, abs=0.10)

    def test_independent_near_zero(self):
        """Independent samples should average close to zero."""
        values = []
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            values.append(DistortionAnalyzer.mutual_info_raw(rng.standard_normal(2000), rng.standard_normal(2000)))
        assert abs(np.mean(values)) <= 0.05

    def test_monotone_transform_invariance(self):
        """exp applied to one axis should move MI by at most 0.05."""
        rng = np.random.default_rng(6)
        x = rng.standard_normal(2000)
        y = 0.6 * x + 0.8 * rng.standard_normal(2000)
        base = DistortionAnalyzer.mutual_info(x, y)
        assert DistortionAnalyzer.mutual_info(np.exp(x), y) == pytest.approx(base, abs=0.05)

    def test_bit_exact_symmetry(self, rng):
        """Swapping the arguments should not change a single bit."""
        x = rng.standard_normal(300)
        y = np.round(x + rng.standard_normal(300), 1)
        assert DistortionAnalyzer.mutual_info(x, y) == DistortionAnalyzer.mutual_info(y, x)

    def test_ties_are_handled(self):
        """Heavily tied integer data should still give a finite estimate."""
        x = np.repeat(np.arange(10.0), 10)
        y = x.copy()
        value = DistortionAnalyzer.mutual_info(x, y)
        assert np.isfinite(value) and value > 1.0

    def test_deterministic(self, rng):
        """Repeated calls should give identical results."""
        x, y = rng.standard_normal(100), rng.standard_normal(100)
        assert DistortionAnalyzer.mutual_info_raw(x, y) == DistortionAnalyzer.mutual_info_raw(x, y)

    def test_clamped_at_zero(self):
        """The reported value should never be negative."""
        rng = np.random.default_rng(5)
        for _ in range(10):
            assert DistortionAnalyzer.mutual_info(rng.standard_normal(50), rng.standard_normal(50)) >= 0.0

    def test_too_few_pairs(self):
        """Fewer than k + 2 pairs should raise."""
        with pytest.raises(InsufficientDataError):
            DistortionAnalyzer.mutual_info([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0], k=3)

    def test_length_mismatch(self):
        """Paired samples must have equal length."""
        with pytest.raises(DataError):
            DistortionAnalyzer.mutual_info(np.zeros(10), np.zeros(11))


class TestStandardizer:
    """Tests for the original-cohort scaler."""

    def test_population_std(self):
        """Scaling should use the mean and population std of the original."""
        original = _table({"f": [1.0, 2.0, 3.0, 4.0]})
        s = DistortionAnalyzer.fit_standardizer(original)
        scaled = DistortionAnalyzer.apply(s, original)
        assert scaled["f"].mean() == pytest.approx(0.0)
        assert scaled["f"].to_numpy().std() == pytest.approx(1.0)

    def test_degenerate_column_scaled_by_one(self):
        """A constant column should be centered but not divided."""
        s = DistortionAnalyzer.fit_standardizer(_table({"c": [5.0, 5.0, 5.0]}))
        assert s.degenerate.tolist() == [True]
        out = DistortionAnalyzer.apply(s, _table({"c": [5.0, 7.0]}))
        assert out["c"].tolist() == [0.0, 2.0]

    def test_missing_column_named(self):
        """Applying to a table without a fitted column should name it."""
        s = DistortionAnalyzer.fit_standardizer(_table({"a": [1.0, 2.0], "b": [3.0, 4.0]}))
        with pytest.raises(DataError, match="b"):
            DistortionAnalyzer.apply(s, _table({"a": [1.0]}))

    def test_single_row_rejected(self):
        """At least two rows are needed to fit."""
        with pytest.raises(InsufficientDataError):
            DistortionAnalyzer.fit_standardizer(_table({"a": [1.0]}))


class TestDistortionReport:
    """Tests for the per-feature report."""

    def test_identity_gives_zero_emd(self, rng):
        """Comparing a table with itself should give EMD 0 and high MI."""
        table = _table({"a": rng.standard_normal(100), "b": rng.standard_normal(100)})
        report = DistortionAnalyzer.distortion_report(table, table.copy())
        assert [r.feature for r in report.rows] == ["a", "b"]
        assert all(r.emd == 0.0 for r in report.rows)
        assert all(r.mi > 1.0 for r in report.rows)
        assert all(r.n == 100 for r in report.rows)

    def test_rows_sorted_by_feature(self, rng):
        """Report rows should be in feature-name order whatever the column order."""
        table = _table({"z": rng.standard_normal(20), "a": rng.standard_normal(20)})
        assert [r.feature for r in DistortionAnalyzer.distortion_report(table, table).rows] == ["a", "z"]

    def test_shift_measured_in_original_std_units(self, rng):
        """A shift of two original stds should give EMD close to 2."""
        a = rng.standard_normal(400)
        original = _table({"f": a})
        anonymized = _table({"f": a + 2 * a.std()})
        assert DistortionAnalyzer.distortion_report(original, anonymized).row("f").emd == pytest.approx(2.0)

    def test_mi_pairs_by_id(self, rng):
        """MI should pair rows by id, not by position."""
        a = rng.standard_normal(200)
        ids = [f"u{i}" for i in range(200)]
        original = _table({"f": a}, ids)
        shuffled = _table({"f": a}, ids).sample(frac=1.0, random_state=0)
        report = DistortionAnalyzer.distortion_report(original, shuffled)
        assert report.row("f").mi > 2.0

    def test_no_shared_ids(self):
        """Tables without common ids cannot be paired."""
        with pytest.raises(InsufficientDataError):
            DistortionAnalyzer.distortion_report(
                _table({"f": [1.0, 2.0, 3.0]}, ["a", "b", "c"]),
                _table({"f": [1.0, 2.0, 3.0]}, ["x", "y", "z"]),
            )
