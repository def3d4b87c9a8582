import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orcon.profile import (
    ProfileTable,
    ResultRow,
    build_table,
    emit,
    profile_curves,
    q_metric,
    ratios,
    read_profile_csv,
    read_results_csv,
    resolve_f_min,
    rho_curve,
    svg_profile,
    tau_grid,
    unsolved_rows,
    write_results_csv,
)

INF = math.inf


def _row(method, start, f, feasible=True):
    v = 0.0 if feasible else 1.0
    return ResultRow(method, start, f, v, v, feasible, 2)


def fixture_rows():
    """Three methods on three starts; the last start defeats everyone."""
    return [
        _row("A", 0, 0.0), _row("A", 1, 2.0), _row("A", 2, 5.0, False),
        _row("B", 0, 1.0), _row("B", 1, 2.0), _row("B", 2, 5.0, False),
        _row("C", 0, 3.0), _row("C", 1, 9.0, False), _row("C", 2, 5.0, False),
    ]


def fixture_table():
    return build_table(fixture_rows(), f_min=0.0, delta=1.0, feas_tol=1e-4)


def test_q_metric_examples():
    assert q_metric(_row("A", 0, 2.0), 2.0, 1.0, 1e-4) == 1.0
    assert q_metric(_row("A", 0, 2.0, False), 2.0, 1.0, 1e-4) == INF
    assert q_metric(_row("A", 0, 2.5), 2.0, 1.0, 1e-4) == 1.5


def test_q_metric_counts_standard_violation():
    row = ResultRow("A", 0, 1.0, 0.0, 1e-3, False, 1)
    assert q_metric(row, 0.0, 1.0, 1e-4) == INF


def test_q_metric_rejects_negative_delta():
    with pytest.raises(ValueError):
        q_metric(_row("A", 0, 1.0), 0.0, -1.0, 1e-4)


def test_fixture_table_and_ratios():
    table = fixture_table()
    assert table.methods == ["A", "B", "C"] and table.starts == [0, 1, 2]
    assert np.array_equal(table.q_values, [[1, 2, 4], [3, 3, INF], [INF, INF, INF]])
    r = ratios(table)
    assert np.array_equal(r, [[1, 2, 4], [1, 1, INF], [INF, INF, INF]])
    assert unsolved_rows(table).tolist() == [False, False, True]


def test_fixture_rho_values():
    r = ratios(fixture_table())
    tau = np.array([1.0, 1.5, 2.0, 4.0, 1e9])
    assert np.array_equal(rho_curve(r, 0, tau), np.array([2, 2, 2, 2, 2]) / 3)
    assert np.array_equal(rho_curve(r, 1, tau), np.array([1, 1, 2, 2, 2]) / 3)
    assert np.array_equal(rho_curve(r, 2, tau), np.array([0, 0, 0, 1, 1]) / 3)


def test_ratio_examples():
    assert np.array_equal(ratios(np.array([[1.0, 2.0, 4.0]])), [[1, 2, 4]])
    assert np.array_equal(ratios(np.array([[3.0, 3.0]])), [[1, 1]])
    assert np.array_equal(ratios(np.array([[2.0, INF]])), [[1, INF]])


def test_ratio_zero_minimum():
    assert np.array_equal(ratios(np.array([[0.0, 0.5, 0.0]])), [[1, INF, 1]])


def test_rho_examples():
    assert np.array_equal(rho_curve(np.ones((4, 1)), 0, np.array([1.0, 3.0])), [1.0, 1.0])
    r = np.array([[1.0], [2.0], [INF]])
    assert rho_curve(r, 0, np.array([1.5]))[0] == pytest.approx(1 / 3)
    assert rho_curve(r, 0, np.array([1e300]))[0] == pytest.approx(2 / 3)


def test_rho_rejects_bad_grid():
    with pytest.raises(ValueError):
        rho_curve(np.ones((2, 1)), 0, np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        rho_curve(np.ones((2, 1)), 0, np.array([2.0, 1.0]))


def test_tau_grid():
    r = np.array([[1.0, 8.0], [1.0, INF]])
    tau = tau_grid(r)
    assert tau.size == 200 and tau[0] == 1.0 and tau[-1] == pytest.approx(8.0)
    assert tau_grid(np.ones((2, 2)))[-1] == 2.0
    assert tau_grid(np.array([[1.0, 1e9]]))[-1] == pytest.approx(1e6)


def test_table_validation():
    with pytest.raises(ValueError):
        ProfileTable(["A"], [0, 1], np.ones((1, 1)), 1.0, 0.0, 1e-4)
    with pytest.raises(ValueError):
        ProfileTable(["A"], [0], np.array([[0.5]]), 1.0, 0.0, 1e-4)
    rows = fixture_rows()
    with pytest.raises(ValueError):
        build_table(rows + [rows[0]], 0.0, 1.0, 1e-4)
    with pytest.raises(ValueError):
        build_table(rows[:-1], 0.0, 1.0, 1e-4)


def test_resolve_f_min():
    rows = fixture_rows()
    assert resolve_f_min(rows, 0.0, 1e-4) == (0.0, "known")
    assert resolve_f_min(rows, 0.5, 1e-4) == (0.0, "best-feasible")
    assert resolve_f_min(rows, None, 1e-4) == (0.0, "best-feasible")
    f, src = resolve_f_min([_row("A", 0, 1.0, False)], None, 1e-4)
    assert math.isnan(f) and src == "none"


def test_emit_counts_and_header(tmp_path):
    rows = [_row(m, s, float(s)) for m in ("B", "A") for s in range(3)]
    table = build_table(rows, 0.0, 1.0, 1e-4)
    paths = emit(table, rows, tmp_path)
    lines = paths["results"].read_text().splitlines()
    assert len(lines) == 1 + 6
    assert paths["profile"].read_text().splitlines()[0] == "tau,B,A"
    assert paths["svg"].read_text().startswith("<svg")


def test_emit_is_byte_stable(tmp_path):
    table = fixture_table()
    a = emit(table, fixture_rows(), tmp_path / "a", title="fixture")
    b = emit(fixture_table(), fixture_rows(), tmp_path / "b", title="fixture")
    for kind in a:
        assert a[kind].read_bytes() == b[kind].read_bytes()


def test_round_trip_reproduces_curves_exactly(tmp_path):
    rows = fixture_rows()
    table = fixture_table()
    paths = emit(table, rows, tmp_path)
    back = read_results_csv(paths["results"])
    assert back == rows
    tau, curves = read_profile_csv(paths["profile"])
    tau2, curves2 = profile_curves(build_table(back, 0.0, 1.0, 1e-4))
    assert np.array_equal(tau, tau2)
    for m in curves:
        assert np.array_equal(curves[m], curves2[m])


def test_results_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_results_csv(path)


def test_svg_escapes_names():
    text = svg_profile(np.array([1.0, 2.0]), {"a<b": np.array([0.0, 1.0])}, title="x & y")
    assert "a&lt;b" in text and "x &amp; y" in text


def test_results_csv_round_trips_floats(tmp_path):
    rows = [ResultRow("A", 0, 0.1 + 0.2, 1e-17, 3.0000000000000004, True, 3)]
    write_results_csv(rows, tmp_path / "r.csv")
    assert read_results_csv(tmp_path / "r.csv") == rows


scores = st.one_of(st.floats(1.0, 100.0), st.just(INF))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.data())
def test_profile_properties(n_starts, n_methods, data):
    q = np.array(data.draw(st.lists(st.lists(scores, min_size=n_methods, max_size=n_methods),
                                    min_size=n_starts, max_size=n_starts)))
    table = ProfileTable([f"m{j}" for j in range(n_methods)], list(range(n_starts)), q, 1.0, 0.0, 1e-4)
    r = ratios(table)
    solved = ~unsolved_rows(table)
    assert np.all(r[solved].min(axis=1) == 1.0)
    tau, curves = profile_curves(table)
    for rho in curves.values():
        assert np.all(np.diff(rho) >= 0) and rho.min() >= 0 and rho.max() <= 1
