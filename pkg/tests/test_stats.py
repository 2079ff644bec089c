
import pytest
import scipy.stats
from hypothesis import assume, given, strategies as st

from rundrift.stats import (RARE, ContingencyTable, DegenerateCategory, Histogram,
                            TestInapplicable, align, chi2_cdf, chi2_critical,
                            chi2_independence, chi2_sf, chi2_statistic, counts_p_value,
                            gof_statistic)

from oracles import mp_chi2_cdf, mp_chi2_sf, mp_pearson

dfs = st.integers(1, 200)
xs = st.floats(0.0, 600.0, allow_nan=False)


def test_known_critical_value():
    assert chi2_critical(0.05, 40) == pytest.approx(55.758, abs=1e-3)
    assert chi2_critical(0.05, 1) == pytest.approx(3.841459, abs=1e-6)


@given(xs, dfs)
def test_cdf_against_mpmath(x, df):
    assert abs(chi2_cdf(x, df) - mp_chi2_cdf(x, df)) < 1e-10


@given(xs, dfs)
def test_sf_against_mpmath_relative(x, df):
    ref = mp_chi2_sf(x, df)
    got = chi2_sf(x, df)
    assert abs(got - ref) <= 1e-10 * max(ref, 1e-300) or abs(got - ref) < 1e-300


@given(dfs, st.floats(0.0, 300.0), st.floats(0.0, 300.0))
def test_cdf_monotone(df, a, b):
    lo, hi = sorted((a, b))
    assert chi2_cdf(lo, df) <= chi2_cdf(hi, df) + 1e-15


@given(dfs, st.floats(1e-6, 0.999))
def test_critical_round_trip(df, alpha):
    x = chi2_critical(alpha, df)
    assert abs(chi2_sf(x, df) - alpha) < 1e-8
    assert x == pytest.approx(scipy.stats.chi2.isf(alpha, df), rel=1e-8)


def test_argument_checks():
    with pytest.raises(ValueError):
        chi2_cdf(1.0, 0)
    with pytest.raises(ValueError):
        chi2_critical(0.0, 3)
    assert chi2_cdf(-1, 3) == 0.0 and chi2_sf(0, 3) == 1.0


tables = st.integers(2, 8).flatmap(lambda k: st.tuples(
    st.lists(st.integers(0, 60), min_size=k, max_size=k),
    st.lists(st.integers(0, 60), min_size=k, max_size=k)))


@given(tables)
def test_independence_against_scipy(table):
    ref, det = table
    rows = [(r, d) for r, d in zip(ref, det) if r + d > 0]
    assume(len(rows) >= 2 and sum(r for r, _ in rows) and sum(d for _, d in rows))
    ct = ContingencyTable([str(i) for i in range(len(ref))], list(ref), list(det))
    stat, df = chi2_statistic(ct)
    exp_stat, exp_df = mp_pearson(ref, det)
    assert df == exp_df
    assert stat == pytest.approx(exp_stat, rel=1e-10, abs=1e-10)
    sp = scipy.stats.chi2_contingency([[r for r, _ in rows], [d for _, d in rows]],
                                      correction=False)
    p = chi2_independence(ct)
    assert p == pytest.approx(sp.pvalue, rel=1e-8, abs=1e-12)
    fast = counts_p_value({str(i): v for i, v in enumerate(ref)},
                          {str(i): v for i, v in enumerate(det)})
    assert fast == pytest.approx(p, rel=1e-9, abs=1e-12)


def test_identical_columns_give_p_one():
    ct = ContingencyTable.from_counts({"a": 5, "b": 5}, {"a": 5, "b": 5})
    assert chi2_independence(ct) == 1.0


def test_single_category_is_inapplicable():
    with pytest.raises(TestInapplicable):
        chi2_statistic(ContingencyTable.from_counts({"a": 5}, {"a": 3, "b": 0}))
    assert counts_p_value({"a": 5}, {"a": 3}) is None
    assert counts_p_value({}, {"a": 3, "b": 1}) is None


def test_gof_statistic():
    assert gof_statistic([10, 20], [15, 15]) == pytest.approx(25 / 15 * 2)
    with pytest.raises(DegenerateCategory):
        gof_statistic([1, 2], [0, 3])
    with pytest.raises(ValueError):
        gof_statistic([1], [1, 2])


def test_histogram_validation():
    with pytest.raises(ValueError):
        Histogram({"a": -1})
    assert Histogram({"a": 2, "b": 0}).scaled(3).counts == {"a": 6, "b": 0}


def test_align_pools_rare_categories():
    before = Histogram({"a": 50, "b": 50, "r1": 1})
    inside = Histogram({"a": 30, "b": 30, "r2": 1})
    after = Histogram({"a": 50, "b": 50, "r3": 1})
    al = align(before, inside, after)
    assert al.categories == ["a", "b", RARE]
    assert al.h_in == [30, 30, 1] and al.h_before == [50, 50, 1]
    assert sorted(al.pooled) == ["r1", "r2", "r3"]
    assert al.df == 2 and not al.degenerate


def test_align_leaves_lone_rare_and_can_be_disabled():
    before = Histogram({"a": 50, "b": 50, "r": 1})
    inside = Histogram({"a": 30, "b": 30})
    after = Histogram({"a": 50, "b": 50})
    assert align(before, inside, after).categories == ["a", "b", "r"]
    many = Histogram({"a": 50, "x": 1, "y": 1})
    assert align(many, inside, after, pool_below=0).pooled == []
