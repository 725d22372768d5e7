import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from digicopy import _table
from digicopy.errors import PanelParseError, PanelValidationError, WindowRangeError
from digicopy.panel import (
    INCOME,
    Panel,
    ParamMeta,
    WindowSpec,
    dump_panel,
    load_panel,
    make_panel,
    validate_panel,
    window_slice,
)


def test_load_small_csv():
    p = load_panel(b"period,a,b\n1,1,2\n2,3,4\n3,5,6")
    assert (p.T, p.n) == (3, 2)
    assert tuple(p.values[0]) == (1.0, 2.0)
    assert p.ids == ["a", "b"]
    assert p.periods == (1, 2, 3)


def test_crlf_and_month_labels():
    p = load_panel(b"period,a\r\n2020-01,1.5\r\n2020-02,2.5\r\n")
    assert p.periods == ("2020-01", "2020-02")
    assert p.values[:, 0].tolist() == [1.5, 2.5]


def test_non_numeric_cell_names_row_and_column():
    with pytest.raises(PanelValidationError) as err:
        load_panel(b"period,a,b\n1,1,2\n2,3,abc\n3,5,6")
    assert err.value.row == 2
    assert err.value.column == "b"
    assert 'column "b"' in str(err.value)


@pytest.mark.parametrize(
    "text, column",
    [
        (b"period,a,b\n1,1,\n", "b"),
        (b"period,a,b\n1,1\n", "b"),
        (b"period,a,b\n1,1,nan\n", "b"),
        (b"period,a,b\n1,1,1e999\n", "b"),
        (b"period,a,a\n1,1,2\n", "a"),
        (b"period,a\n2,1\n1,2\n", "period"),
        (b"period,a\n1,1\n1,2\n", "period"),
        (b"period,a\n1,1 000\n", "a"),
        (b"period,a\n1,1_000\n", "a"),
    ],
)
def test_validation_errors(text, column):
    with pytest.raises(PanelValidationError) as err:
        load_panel(text)
    assert err.value.column == column


def test_parse_errors():
    with pytest.raises(PanelParseError):
        load_panel(b"")
    with pytest.raises(PanelParseError):
        load_panel(b"time,a\n1,2\n")
    with pytest.raises(PanelParseError) as err:
        load_panel(b'period,a\n1,"2\n')
    assert err.value.line is not None
    with pytest.raises(PanelParseError):
        load_panel(b"period,a\n1,2,3\n")


def test_published_basic_column_as_panel():
    text = "period,v_basic\n" + "".join(f"{t},{b}\n" for t, b, _, _ in _table.ROWS)
    p = load_panel(text.encode())
    assert (p.T, p.n) == (57, 1)
    assert p.values[0, 0] == 87.3361


def test_sidecar_metadata():
    meta = b"param_id,process_id,kind\na,delivery,income\n"
    p = load_panel(b"period,a,b\n1,1,2\n2,3,4\n", meta)
    assert p.params[0] == ParamMeta("a", "delivery", INCOME)
    assert p.params[1] == ParamMeta("b", "b", "expense")
    with pytest.raises(PanelValidationError):
        load_panel(b"period,a\n1,1\n", b"param_id,process_id,kind\nzz,p,expense\n")
    with pytest.raises(PanelValidationError):
        load_panel(b"period,a\n1,1\n", b"param_id,process_id,kind\na,p,revenue\n")


def test_panel_is_immutable_and_unaliased():
    src = np.array([[1.0, 2.0], [3.0, 4.0]])
    p = make_panel(src)
    src[0, 0] = 99.0
    assert p.values[0, 0] == 1.0
    with pytest.raises(ValueError):
        p.values[0, 0] = 5.0


def test_validate_clean_panel():
    assert len(validate_panel(make_panel([[1, 2], [3, 5], [4, 7]]))) == 0


def test_validate_nan():
    p = Panel((1, 2, 3), ("a", "b"), [[1, 2], [float("nan"), 5], [4, 7]])
    report = validate_panel(p)
    assert len(report) == 1
    (f,) = report.findings
    assert f.severity == "error"
    assert f.column == "a" and f.period == 2


def test_validate_constant_column_warns():
    p = make_panel([[1, 2], [1, 5], [1, 7]])
    (f,) = validate_panel(p).findings
    assert f.severity == "warning"
    assert f.message == "zero variance possible in any window"
    assert f.column == "x1"


def test_validate_structural_problems():
    assert not validate_panel(Panel((1, 1), ("a",), [[1], [2]])).ok
    assert not validate_panel(Panel((1, 2), ("a", "a"), [[1, 2], [2, 3]])).ok
    assert not validate_panel(Panel((1,), ("a",), [[1], [2]])).ok
    assert not validate_panel(Panel((1, 2), (ParamMeta("a", kind="asset"),), [[1], [2]])).ok


@pytest.mark.parametrize(
    "T, k, t, expected",
    [(6, 6, 6, [5, 4, 3, 2, 1, 0]), (3, 2, 2, [1, 0]), (3, 2, 3, [2, 1])],
)
def test_window_slice_rows(T, k, t, expected):
    values = np.arange(T * 2, dtype=float).reshape(T, 2)
    p = make_panel(values)
    w = window_slice(p, t, WindowSpec(k))
    assert w.at_time == t
    np.testing.assert_array_equal(w.rows, values[expected])


def test_window_slice_out_of_range():
    p = make_panel(np.zeros((3, 1)) + np.arange(3)[:, None])
    with pytest.raises(WindowRangeError, match="minimum valid t is 2"):
        window_slice(p, 1, WindowSpec(2))
    with pytest.raises(WindowRangeError):
        window_slice(p, 4, WindowSpec(2))


def test_window_slice_does_not_alias():
    p = make_panel(np.arange(8.0).reshape(4, 2))
    w = window_slice(p, 3, 2)
    w.rows[0, 0] = -1.0
    assert p.values[2, 0] == 4.0


def test_window_spec_rejects_short_windows():
    with pytest.raises(ValueError):
        WindowSpec(1)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6), elements=finite))
def test_round_trip_bit_exact(values):
    p = make_panel(values)
    q = load_panel(dump_panel(p))
    assert q == p
    assert q.values.tobytes() == p.values.tobytes()


@settings(max_examples=200, deadline=None)
@given(
    hnp.arrays(np.float64, st.tuples(st.integers(2, 10), st.integers(1, 5)), elements=finite),
    st.data(),
)
def test_window_slice_property(values, data):
    p = make_panel(values)
    k = data.draw(st.integers(2, p.T))
    t = data.draw(st.integers(k, p.T))
    w = window_slice(p, t, k)
    for l in range(1, k + 1):
        assert w.rows[l - 1].tobytes() == p.values[t - l].tobytes()


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="period,ab1234567890.-+eE\n\r\"xnaif ", max_size=80))
def test_load_never_returns_invalid_panel(text):
    try:
        p = load_panel(text.encode())
    except (PanelParseError, PanelValidationError):
        return
    assert validate_panel(p).ok
    assert np.isfinite(p.values).all()
    assert all(math.isfinite(x) for x in p.values.ravel())
