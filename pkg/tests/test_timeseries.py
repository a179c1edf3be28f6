import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from genmotif.timeseries import (
    CsvFormatError,
    Segment,
    Solution,
    TimeSeries,
    extract_segment,
    read_csv,
    some_overlap,
    upsample_linear,
    znormalize,
)


def seg(values):
    v = np.asarray(values, dtype=float)
    return Segment(v[:, None] if v.ndim == 1 else v)


def test_timeseries_rejects_nan_and_empty():
    with pytest.raises(ValueError):
        TimeSeries([1.0, np.nan])
    with pytest.raises(ValueError):
        TimeSeries(np.empty((0, 1)))
    z = TimeSeries([1.0, 2.0])
    assert (z.n, z.d) == (2, 1)
    assert not z.values.flags.writeable


def test_extract_whole_series_is_identity():
    z = TimeSeries(np.arange(5.0))
    x = extract_segment(z, 1, 5)
    np.testing.assert_array_equal(x.values, z.values)
    assert x.origin == (1, 5)


def test_extract_middle():
    z = TimeSeries([10.0, 20.0, 30.0, 40.0])
    np.testing.assert_array_equal(extract_segment(z, 2, 2).values[:, 0], [20.0, 30.0])


def test_extract_out_of_bounds():
    z = TimeSeries(np.arange(5.0))
    with pytest.raises(IndexError):
        extract_segment(z, 4, 3)
    with pytest.raises(IndexError):
        extract_segment(z, 0, 2)


def test_extract_is_a_copy():
    z = TimeSeries(np.arange(5.0))
    x = extract_segment(z, 1, 3)
    x.values[0, 0] = 99
    assert z.values[0, 0] == 0


@pytest.mark.parametrize(
    "values, L, expected",
    [
        ([0, 1], 3, [0, 0.5, 1]),
        ([0, 3, 0], 5, [0, 1.5, 3, 1.5, 0]),
        ([7], 4, [7, 7, 7, 7]),
    ],
)
def test_upsample_examples(values, L, expected):
    np.testing.assert_allclose(upsample_linear(seg(values), L).values[:, 0], expected, atol=1e-15)


def test_upsample_rejects_downsampling():
    with pytest.raises(ValueError):
        upsample_linear(seg([1, 2, 3]), 2)


def test_upsample_multidimensional_independent():
    x = seg([[0, 10], [2, 30]])
    np.testing.assert_allclose(upsample_linear(x, 3).values, [[0, 10], [1, 20], [2, 30]])


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 3)),
           elements=st.floats(-1e6, 1e6)),
    st.integers(0, 40),
)
def test_upsample_keeps_endpoints_exactly(values, extra):
    x = Segment(values)
    y = upsample_linear(x, x.length + extra).values
    assert np.array_equal(y[0], values[0])
    assert np.array_equal(y[-1], values[-1])


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 3)), elements=st.floats(-1e6, 1e6)))
def test_extract_then_upsample_to_same_length_is_identity(values):
    z = TimeSeries(values)
    x = extract_segment(z, 1, z.n)
    assert np.array_equal(upsample_linear(x, z.n).values, values)


def test_znormalize_examples():
    np.testing.assert_allclose(znormalize(seg([1, 2, 3])).values[:, 0], [-1.2247448714, 0, 1.2247448714])
    np.testing.assert_array_equal(znormalize(seg([5, 5, 5])).values[:, 0], [0, 0, 0])


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 3)), elements=st.floats(-1e3, 1e3)))
def test_znormalize_moments_and_idempotence(values):
    x = znormalize(Segment(values)).values
    for q in range(values.shape[1]):
        col = x[:, q]
        if np.all(col == 0):
            continue
        assert abs(col.mean()) < 1e-9
        assert abs(col.std() - 1) < 1e-9
    np.testing.assert_allclose(znormalize(Segment(x)).values, x, atol=1e-9)


def sol(*genes):
    return Solution.from_genes([(f, l, 0.5) for f, l in genes])


@pytest.mark.parametrize(
    "genes, tol, expected",
    [
        ([(1, 10), (11, 10)], 0.0, False),
        ([(1, 10), (10, 10)], 0.0, True),
        ([(1, 10), (9, 10)], 0.25, False),  # shares 9, 10 -> 2 <= floor(2.5)
        ([(1, 10), (8, 10)], 0.25, True),  # shares 3 samples
        ([(1, 10)], 0.0, False),
    ],
)
def test_some_overlap_examples(genes, tol, expected):
    assert some_overlap(sol(*genes), tol) is expected


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.tuples(st.integers(1, 60), st.integers(1, 15)), min_size=1, max_size=6),
    st.sampled_from([0.0, 0.1, 0.25, 0.5]),
    st.randoms(),
)
def test_some_overlap_matches_enumeration_and_is_order_free(genes, tol, rnd):
    cover = [set(range(f, f + l)) for f, l in genes]
    expected = any(
        len(cover[i] & cover[j]) > int(tol * min(genes[i][1], genes[j][1]) + 1e-9)
        for i in range(len(genes))
        for j in range(i + 1, len(genes))
    )
    assert some_overlap(sol(*genes), tol) is expected
    shuffled = list(genes)
    rnd.shuffle(shuffled)
    assert some_overlap(sol(*shuffled), tol) is expected


def test_solution_roundtrip_and_bounds():
    s = Solution.from_genes([(1, 5, 0.1), (7, 6, 0.9)])
    assert s.genes[1] == (7, 6, 0.9)
    s.check_bounds(20, 5, 6)
    with pytest.raises(ValueError):
        s.check_bounds(11, 5, 6)


def test_read_csv_header_and_dims(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("a,b\n1,2\n3.5,4\n")
    z = read_csv(p)
    assert (z.n, z.d) == (2, 2)
    np.testing.assert_array_equal(z.values, [[1, 2], [3.5, 4]])


def test_read_csv_no_header(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("1\n2\n3\n")
    assert read_csv(p).n == 3


def test_read_csv_bad_cell_names_line(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("value\n1\n2\nx\n")
    with pytest.raises(CsvFormatError, match="line 4"):
        read_csv(p)


def test_read_csv_missing_file(tmp_path):
    with pytest.raises(CsvFormatError):
        read_csv(tmp_path / "nope.csv")


def test_pickle_round_trip_stays_read_only():
    import pickle

    z = pickle.loads(pickle.dumps(TimeSeries(np.arange(6.0).reshape(3, 2))))
    assert not z.values.flags.writeable
    np.testing.assert_array_equal(z.values, np.arange(6.0).reshape(3, 2))
