import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pearson_direct, pearson_two_pass, two_pass_mean_std, zscore_outlier_rows
from socbench.data import (
    Frame,
    SplitSpec,
    apply_standardizer,
    destandardize,
    fit_standardizer,
    generate_synthetic,
    load_csv,
    remove_outliers,
    select_features,
    split,
)
from socbench.errors import (
    EmptyAfterCleaningError,
    HeaderMissingError,
    InvalidFractionsError,
    InvalidSizeError,
    NoFeaturesSelectedError,
    SchemaMismatchError,
    TargetColumnMissingError,
    ZeroVarianceFeatureError,
)


def make_frame(columns: dict, target="y"):
    names = tuple(columns)
    return Frame(names, np.column_stack([columns[n] for n in names]), target)


class TestFrame:
    def test_immutable(self):
        fr = make_frame({"a": [1.0, 2.0], "y": [3.0, 4.0]})
        with pytest.raises(ValueError):
            fr.values[0, 0] = 9.0

    def test_target_must_exist(self):
        with pytest.raises(TargetColumnMissingError):
            Frame(("a",), np.zeros((2, 1)), "y")

    def test_duplicate_names(self):
        with pytest.raises(SchemaMismatchError):
            Frame(("a", "a"), np.zeros((2, 2)), "a")


class TestLoadCsv:
    def test_basic(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("t,v,soc\n0,3.6,90\n1,3.5,89\n2,3.4,88\n")
        fr = load_csv(p, target_name="soc")
        assert fr.n_rows == 3
        assert fr.column_names == ("t", "v", "soc")
        np.testing.assert_array_equal(fr.y, [90, 89, 88])

    def test_unparseable_row_dropped(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("t,v,soc\n0,3.6,90\n1,abc,89\n2,3.4,88\n")
        fr = load_csv(p, target_name="soc")
        assert fr.n_rows == 2
        assert fr.dropped_rows == 1

    def test_missing_target(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("t,v\n0,3.6\n")
        with pytest.raises(TargetColumnMissingError):
            load_csv(p, target_name="soc")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv")

    def test_header_missing(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("0,3.6,90\n1,3.5,89\n")
        with pytest.raises(HeaderMissingError):
            load_csv(p)
        p.write_text("")
        with pytest.raises(HeaderMissingError):
            load_csv(p)

    def test_non_numeric_column_dropped(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("trip,v,soc\nA,3.6,90\nB,3.5,89\nC,3.4,88\n")
        with pytest.warns(UserWarning, match="non-numeric"):
            fr = load_csv(p, target_name="soc")
        assert fr.column_names == ("v", "soc")
        assert fr.dropped_columns == ("trip",)

    def test_empty_after_cleaning(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("v,soc\n1,\n2,\n3,x\n")
        with pytest.raises(EmptyAfterCleaningError):
            load_csv(p, target_name="soc")

    def test_semicolon_and_decimal_comma(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("Time [s];Voltage [V];SoC [%]\n0;391,5;86,9\n1;390,25;86,8\n")
        fr = load_csv(p, delimiter=";", target_name="SoC [%]", decimal=",")
        np.testing.assert_array_equal(fr.column("Voltage [V]"), [391.5, 390.25])
        np.testing.assert_array_equal(fr.y, [86.9, 86.8])

    def test_round_trip_is_bit_exact(self, tmp_path):
        fr = generate_synthetic(50, 4, seed=3)
        fr.to_csv(tmp_path / "f.csv")
        back = load_csv(tmp_path / "f.csv", target_name="soc")
        assert back.equals(fr)


class TestSynthetic:
    def test_deterministic(self):
        a = generate_synthetic(1000, 10, seed=7)
        b = generate_synthetic(1000, 10, seed=7)
        assert a.equals(b)
        assert not a.equals(generate_synthetic(1000, 10, seed=8))

    def test_soc_range(self):
        for seed in range(5):
            soc = generate_synthetic(2000, 5, seed=seed).y
            assert soc.min() >= 0.0 and soc.max() <= 100.0

    def test_soc_non_increasing_within_trips(self):
        fr = generate_synthetic(1000, 10, seed=7, trip_length=500)
        soc = fr.y
        elapsed = fr.column("elapsed_s")
        starts = np.flatnonzero(elapsed == 0.0)
        np.testing.assert_array_equal(starts, [0, 500])
        for a, b in zip(starts, list(starts[1:]) + [len(soc)]):
            assert np.all(np.diff(soc[a:b]) <= 0.0)

    def test_invalid_size(self):
        with pytest.raises(InvalidSizeError):
            generate_synthetic(9, 5, seed=0)
        with pytest.raises(InvalidSizeError):
            generate_synthetic(100, 2, seed=0)

    def test_columns(self):
        fr = generate_synthetic(20, 8, seed=0)
        assert fr.feature_names[:3] == ("current_a", "voltage_v", "temperature_c")
        assert fr.feature_names[-2:] == ("noise_0", "noise_1")
        assert fr.target_name == "soc"


class TestSelectFeatures:
    def test_self_correlation(self):
        y = np.arange(10.0)
        fr = make_frame({"copy": y, "y": y})
        out, rep = select_features(fr)
        assert rep.selected == ["copy"]
        assert rep.correlation["copy"] == 1.0

    def test_constant_dropped(self):
        y = np.arange(10.0)
        fr = make_frame({"c": np.full(10, 4.0), "x": y ** 2, "y": y})
        out, rep = select_features(fr)
        assert ("c", "zero variance") in rep.dropped
        assert out.feature_names == ("x",)

    def test_pure_noise_dropped(self):
        rng = np.random.default_rng(11)
        y = rng.normal(size=1000)
        noise = rng.normal(size=1000)
        fr = make_frame({"sig": y + 0.1 * rng.normal(size=1000), "noise": noise, "y": y})
        out, rep = select_features(fr, corr_threshold=0.1)
        r_direct = pearson_direct(noise.tolist(), y.tolist())
        r_two_pass = pearson_two_pass(noise.tolist(), y.tolist())
        assert abs(r_direct - r_two_pass) < 1e-12
        assert abs(rep.correlation["noise"] - r_two_pass) < 1e-12
        assert abs(r_two_pass) < 0.1
        assert ("noise", "low correlation") in rep.dropped
        assert rep.selected == ["sig"]

    def test_report_partition(self):
        fr = generate_synthetic(1000, 10, seed=1)
        _, rep = select_features(fr)
        dropped = {n for n, _ in rep.dropped}
        assert not dropped & set(rep.selected)
        assert dropped | set(rep.selected) == set(fr.feature_names)
        for name in rep.selected:
            assert rep.variance[name] > rep.variance_threshold
            assert abs(rep.correlation[name]) >= rep.corr_threshold

    def test_nothing_selected(self):
        y = np.arange(10.0)
        fr = make_frame({"c": np.ones(10), "y": y})
        with pytest.raises(NoFeaturesSelectedError):
            select_features(fr)

    def test_row_order_does_not_matter(self):
        fr = generate_synthetic(1000, 10, seed=2)
        perm = np.random.default_rng(0).permutation(fr.n_rows)
        _, a = select_features(fr)
        _, b = select_features(fr.take(perm))
        assert a.selected == b.selected
        assert a.dropped == b.dropped


class TestRemoveOutliers:
    def test_constant_column_never_removes(self):
        fr = make_frame({"c": np.ones(5), "y": np.arange(5.0)})
        out, removed = remove_outliers(fr, 3.0)
        assert removed == 0 and out.n_rows == 5

    def test_all_at_mean(self):
        fr = make_frame({"a": np.full(6, 2.0), "b": np.full(6, -1.0), "y": np.arange(6.0)})
        assert remove_outliers(fr, 3.0)[1] == 0

    def test_injected_spikes_match_brute_force(self):
        rng = np.random.default_rng(5)
        n = 200
        X = rng.uniform(-1, 1, size=(n, 3))
        rows = rng.choice(n, size=5, replace=False)
        cols = rng.integers(0, 3, size=5)
        X[rows, cols] = 10.0 * X[:, 0].std() * 10
        fr = Frame(("a", "b", "c", "y"), np.column_stack([X, rng.normal(size=n)]), "y")
        expected = zscore_outlier_rows(X, 3.0)
        assert expected == set(rows.tolist())
        out, removed = remove_outliers(fr, 3.0)
        assert removed == 5
        kept = {tuple(r) for r in out.values}
        assert all(tuple(fr.values[i]) not in kept for i in rows)

    def test_count_identity(self):
        fr = generate_synthetic(3000, 6, seed=4, n_spikes=20)
        out, removed = remove_outliers(fr, 3.0)
        assert out.n_rows == fr.n_rows - removed
        assert removed == len(zscore_outlier_rows(fr.X, 3.0))

    def test_target_not_considered(self):
        y = np.zeros(50)
        y[0] = 1e6
        fr = make_frame({"a": np.linspace(0, 1, 50), "y": y})
        assert remove_outliers(fr, 3.0)[1] == 0

    def test_bad_threshold(self):
        fr = make_frame({"a": [1.0, 2.0], "y": [1.0, 2.0]})
        with pytest.raises(ValueError):
            remove_outliers(fr, 0.0)


class TestStandardizer:
    def test_two_points(self):
        p = fit_standardizer(make_frame({"a": [2.0, 4.0], "y": [0.0, 1.0]}))
        assert p.mean[0] == 3.0 and p.std[0] == 1.0

    def test_zero_variance(self):
        with pytest.raises(ZeroVarianceFeatureError) as exc:
            fit_standardizer(make_frame({"flat": [5.0, 5.0, 5.0], "y": [1.0, 2.0, 3.0]}))
        assert exc.value.column == "flat"

    def test_matches_two_pass(self):
        rng = np.random.default_rng(9)
        x = rng.normal(40.0, 7.0, size=1000)
        p = fit_standardizer(make_frame({"x": x, "y": rng.normal(size=1000)}))
        mean, std = two_pass_mean_std(x)
        assert abs(p.mean[0] - mean) < 1e-12
        assert abs(p.std[0] - std) < 1e-12

    def test_defining_property_and_target_untouched(self):
        fr = generate_synthetic(1000, 6, seed=3)
        p = fit_standardizer(fr)
        z = apply_standardizer(fr, p)
        assert np.all(np.abs(z.X.mean(axis=0)) < 1e-10)
        assert np.all(np.abs(z.X.std(axis=0) - 1.0) < 1e-10)
        np.testing.assert_array_equal(z.y, fr.y)

    def test_value_at_mean(self):
        p = fit_standardizer(make_frame({"a": [2.0, 4.0], "y": [0.0, 1.0]}))
        z = apply_standardizer(make_frame({"a": [3.0, 3.0], "y": [0.0, 0.0]}), p)
        np.testing.assert_array_equal(z.X[:, 0], [0.0, 0.0])

    def test_round_trip(self):
        fr = generate_synthetic(500, 6, seed=3)
        p = fit_standardizer(fr)
        back = destandardize(apply_standardizer(fr, p).X, p)
        np.testing.assert_allclose(back, fr.X, rtol=0, atol=1e-12 * np.abs(fr.X).max())

    def test_schema_mismatch(self):
        p = fit_standardizer(make_frame({"a": [2.0, 4.0], "y": [0.0, 1.0]}))
        with pytest.raises(SchemaMismatchError):
            apply_standardizer(make_frame({"b": [2.0, 4.0], "y": [0.0, 1.0]}), p)

    def test_no_leakage(self):
        fr = generate_synthetic(600, 6, seed=5)
        train, val, test = split(fr, SplitSpec(shuffle_seed=1))
        p = fit_standardizer(train)
        a = apply_standardizer(val, p)
        # appending unrelated rows to the other split changes nothing for val
        p2 = fit_standardizer(train)
        b = apply_standardizer(val, p2)
        assert a.equals(b)
        swapped = apply_standardizer(test, p)
        np.testing.assert_array_equal(swapped.X, (test.X - p.mean) / p.std)


class TestSplit:
    def test_sizes(self):
        fr = make_frame({"a": np.arange(10.0), "y": np.arange(10.0)})
        tr, va, te = split(fr, SplitSpec(0.7, 0.15, 0.15, shuffle_seed=1))
        assert (tr.n_rows, va.n_rows, te.n_rows) == (8, 1, 1)

    def test_deterministic_and_exhaustive(self):
        fr = make_frame({"a": np.arange(97.0), "y": np.arange(97.0)})
        spec = SplitSpec(shuffle_seed=4)
        first = split(fr, spec)
        second = split(fr, spec)
        for a, b in zip(first, second):
            assert a.equals(b)
        ids = np.concatenate([f.column("a") for f in first])
        assert sorted(ids.tolist()) == list(range(97))

    def test_invalid_fractions(self):
        with pytest.raises(InvalidFractionsError):
            SplitSpec(0.8, 0.2, 0.2)
        with pytest.raises(InvalidFractionsError):
            SplitSpec(1.0, 0.0, 0.0)

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 400), seed=st.integers(0, 2**31))
    def test_partition_property(self, n, seed):
        fr = make_frame({"a": np.arange(float(n)), "y": np.zeros(n)})
        parts = split(fr, SplitSpec(shuffle_seed=seed))
        ids = np.concatenate([p.column("a") for p in parts])
        assert len(ids) == n and len(set(ids.tolist())) == n
        assert parts[1].n_rows == int(0.15 * n) and parts[2].n_rows == int(0.15 * n)
