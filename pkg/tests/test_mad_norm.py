import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectpls.dataset import MetricDataset
from defectpls.errors import (
    ConfigurationError,
    DegenerateSampleWarning,
    InvalidInputError,
)
from defectpls.mad_norm import (
    MadParams,
    ThresholdTable,
    build_threshold_table,
    load_thresholds,
    mad,
    mad_threshold,
    normalize,
    save_thresholds,
)


class TestMad:
    def test_constant_sample(self):
        assert mad([1, 1, 1]) == 0.0

    def test_hand_enumeration(self):
        # median 3, deviations {2,1,0,1,2}, median of those is 1
        assert mad([1, 2, 3, 4, 5]) == 1.0

    def test_even_length_median(self):
        # median 2.5, deviations {2.5, 2.5}
        assert mad([0, 5]) == 2.5

    def test_empty_sample_rejected(self):
        with pytest.raises(InvalidInputError):
            mad([])

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
        st.floats(-1e6, 1e6),
    )
    def test_translation_invariance(self, values, shift):
        x = np.asarray(values)
        scale = max(1.0, np.abs(x).max(), abs(shift))
        assert mad(x + shift) == pytest.approx(mad(x), abs=1e-9 * scale)


class TestMadThreshold:
    def test_zero_heavy_sample(self):
        # first pass med=0, MAD=0 strips zeros; second pass on [0, 5] has
        # med 2.5 and sigma 7.5, nothing qualifies, so the max wins
        assert mad_threshold([0, 0, 0, 5]) == 5.0

    def test_constant_sample_selects_min(self):
        # sigma = 0 makes every deviation qualify via the non-strict >=
        assert mad_threshold([1, 1, 1]) == 1.0

    def test_all_zero_fallback(self):
        with pytest.warns(DegenerateSampleWarning):
            assert mad_threshold([0, 0, 0, 0]) == 1.0

    def test_singleton(self):
        assert mad_threshold([7]) == 7.0

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            mad_threshold([1, -2, 3])

    def test_zero_strip_equivalence(self):
        # med = 0 and sigma = 0 with nonzero values present: result equals
        # the threshold of the all-but-one-zero-stripped sample
        rng = np.random.default_rng(7)
        for _ in range(200):
            n_zero = int(rng.integers(5, 30))
            n_val = int(rng.integers(1, 4))
            values = np.concatenate(
                (np.zeros(n_zero), rng.uniform(0.1, 100, size=n_val))
            )
            rng.shuffle(values)
            if np.median(values) != 0:
                continue
            stripped = np.concatenate(([0.0], values[values != 0]))
            assert mad_threshold(values) == mad_threshold(stripped)

    def test_terminates_and_positive_on_random_samples(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            values = rng.uniform(0, 50, size=n)
            values[rng.random(n) < 0.6] = 0.0  # zero-heavy on purpose
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateSampleWarning)
                t = mad_threshold(values)
            assert t > 0

    def test_scale_factor_matters(self):
        # small k qualifies the point nearest the median beyond k*MAD
        values = [1.0, 2.0, 3.0, 4.0, 100.0]
        assert mad_threshold(values, MadParams(k=3)) == 100.0
        assert mad_threshold(values, MadParams(k=1)) == 1.0

    def test_qualifying_zero_falls_back(self):
        # med 10, MAD 0: the non-strict rule would pick the zero, which no
        # normalization can use; expect the positive fallback instead
        with pytest.warns(DegenerateSampleWarning):
            assert mad_threshold([0, 10, 10, 10, 10]) == 1.0

    def test_bad_k_rejected(self):
        with pytest.raises(InvalidInputError):
            MadParams(k=0)


class TestThresholdTable:
    def test_build_from_benchmark(self):
        benchmark = MetricDataset(
            names=("A", "B"),
            X=np.array([[0, 1], [0, 1], [0, 1], [5, 1]], dtype=float),
        )
        table = build_threshold_table(benchmark)
        assert table.entries == {"A": 5.0, "B": 1.0}
        assert table.degenerate == frozenset()

    def test_single_row_benchmark(self):
        benchmark = MetricDataset(names=("col",), X=np.array([[7.0]]))
        assert build_threshold_table(benchmark).entries == {"col": 7.0}

    def test_degenerate_column_flagged(self):
        benchmark = MetricDataset(
            names=("dead", "live"), X=np.array([[0, 1], [0, 2], [0, 3]], dtype=float)
        )
        with pytest.warns(DegenerateSampleWarning):
            table = build_threshold_table(benchmark)
        assert table.entries["dead"] == 1.0
        assert table.degenerate == frozenset({"dead"})

    def test_invalid_threshold_rejected(self):
        with pytest.raises(InvalidInputError):
            ThresholdTable(entries={"A": 0.0})


class TestNormalize:
    @pytest.fixture
    def table(self):
        return ThresholdTable(entries={"A": 111.0, "B": 2.0})

    def test_cap_linear_zero(self, table):
        ds = MetricDataset(
            names=("A", "B"), X=np.array([[222.0, 1.0], [55.5, 0.0]])
        )
        out = normalize(ds, table)
        assert out.X[0, 0] == 1.0
        assert out.X[1, 0] == 0.5
        assert out.X[0, 1] == 0.5
        assert out.X[1, 1] == 0.0

    def test_range_and_passthrough(self, table):
        rng = np.random.default_rng(3)
        ds = MetricDataset(
            names=("A", "B"),
            X=rng.uniform(0, 500, size=(40, 2)),
            bug_counts=rng.integers(0, 3, size=40),
            row_ids=tuple(str(i) for i in range(40)),
        )
        out = normalize(ds, table)
        assert (out.X >= 0).all() and (out.X <= 1).all()
        assert np.array_equal(out.bug_counts, ds.bug_counts)
        assert out.row_ids == ds.row_ids

    def test_unit_thresholds_are_identity_on_normalized(self, table):
        rng = np.random.default_rng(4)
        ds = MetricDataset(names=("A", "B"), X=rng.uniform(0, 500, size=(25, 2)))
        once = normalize(ds, table)
        unit = ThresholdTable(entries={"A": 1.0, "B": 1.0})
        again = normalize(once, unit)
        assert np.array_equal(once.X, again.X)

    def test_missing_threshold_names_column(self, table):
        ds = MetricDataset(
            names=("A", "C"), X=np.array([[1.0, 2.0]])
        )
        with pytest.raises(ConfigurationError, match="C"):
            normalize(ds, table)


class TestThresholdFile:
    def test_roundtrip_exact(self, tmp_path):
        table = ThresholdTable(
            entries={"LLOC": 111.0, "AD": 0.909, "X": 0.1 + 0.2, "tiny": 5e-324}
        )
        path = tmp_path / "thresholds.csv"
        save_thresholds(table, path)
        loaded = load_thresholds(path)
        assert loaded.entries == table.entries

    @settings(max_examples=200)
    @given(
        entries=st.dictionaries(
            st.text(
                alphabet=st.characters(
                    whitelist_categories=("L", "N"), max_codepoint=0x7F
                ),
                min_size=1,
                max_size=8,
            ),
            st.floats(
                min_value=0, exclude_min=True, allow_infinity=False, width=64
            ),
            min_size=1,
            max_size=10,
        )
    )
    def test_roundtrip_property(self, entries, tmp_path_factory):
        table = ThresholdTable(entries=entries)
        path = tmp_path_factory.mktemp("thr") / "t.csv"
        save_thresholds(table, path)
        assert load_thresholds(path).entries == table.entries

    def test_rewrite_is_byte_identical(self, tmp_path):
        table = ThresholdTable(entries={"A": 5.0, "B": 1.0})
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        save_thresholds(table, p1)
        save_thresholds(table, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_parse_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("metric,threshold\nA,5.0\nB,oops\n")
        with pytest.raises(Exception, match="line 3"):
            load_thresholds(path)
