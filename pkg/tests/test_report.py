import json
import math

import numpy as np
import pytest

from sbindex.errors import EmptyRunError, SchemaError
from sbindex.ingest import Snapshot, emit_dataset, parse_dataset
from sbindex.missingmass import MissingMassEstimate, missing_mass
from sbindex.report import (
    TABLE_COLUMNS,
    TableRow,
    build_table_row,
    emit_ccdf_plot,
    emit_table,
    emit_timeseries,
    estimate_year,
    format_band,
    parse_overlay,
    parse_table_json,
    run_pipeline,
)
from sbindex.synth import SynthConfig, capped_pareto_sample
from sbindex.tailfit import FitWindow, ParetoFit, empirical_ccdf, fit_pareto, select_window


def _row_2015():
    # realistic 2015-scale magnitudes with made-up diagnostics
    return TableRow(
        year=2015, i_sb_tusd=103.49, band_lo_tusd=100.7, band_hi_tusd=106.0,
        total_assets_busd=161461.85, ratio=103490 / 161461.85, a=2.19, b=0.91,
        se_a=0.0512, se_b=0.00734, x_c_busd=2000.0, x_max_busd=47062.579417189, n_fit=57,
    )


def _capped_years(years, **kw):
    return {
        y: capped_pareto_sample(SynthConfig(cap=3000.0, seed=100 + i, year=y, **kw))[0]
        for i, y in enumerate(years)
    }


@pytest.fixture(scope="module")
def three_year_csv():
    return emit_dataset(_capped_years([2013, 2014, 2015]).values())


def test_table_row_units(capped_2000):
    s, _ = capped_2000
    pts = empirical_ccdf(s)
    fit = fit_pareto(select_window(pts, FitWindow()))
    est = missing_mass(s, fit, points=pts)
    row = build_table_row(est)
    assert row.i_sb_tusd == est.i_sb / 1000
    assert (row.band_lo_tusd, row.band_hi_tusd) == (est.band[0] / 1000, est.band[1] / 1000)
    assert row.band_lo_tusd <= row.i_sb_tusd <= row.band_hi_tusd
    assert row.total_assets_busd == est.total_assets
    assert row.ratio == est.i_sb / est.total_assets
    assert (row.x_c_busd, row.x_max_busd, row.n_fit) == (est.x_c, est.x_max, fit.n_fit)
    assert [f for f in TABLE_COLUMNS[:8]] == [
        "year", "i_sb_tusd", "band_lo_tusd", "band_hi_tusd", "total_assets_busd", "ratio", "a", "b"]


def test_table_row_2015_magnitudes():
    est = MissingMassEstimate(
        year=2015, i_sb=103490.0, band=(100700.0, 106000.0), x_c=2000.0, x_max=47062.58,
        theoretical_tail_assets=117736.69, empirical_tail_assets=14246.69, total_assets=161461.85,
        ratio=103490.0 / 161461.85, fit=ParetoFit(2.19, 0.91, 0.05, 0.007, 57, FitWindow(), 0.0, 0.0),
        n=2000, cutoff_rule="fixed:2000", band_rule="corners",
    )
    row = build_table_row(est)
    assert row.i_sb_tusd == pytest.approx(103.49, abs=1e-12)
    assert round(row.ratio, 2) == 0.64


def test_zero_estimate_row_renders_zeros():
    row = TableRow(2015, 0.0, 0.0, 0.0, 1000.0, 0.0, 1.0, 0.9, 0.0, 0.0, 5.0, 5.0, 12)
    assert format_band(row) == "[0.00, 0.00]"
    line = emit_table([row]).decode().splitlines()[1]
    assert line.startswith("2015,0.00,0.00,0.00,1000.00,0.00,")


def test_negative_zero_is_not_rendered():
    row = TableRow(2015, -1e-9, -1e-9, 0.0, 1000.0, -1e-12, 1.0, 0.9, 0.0, 0.0, 5.0, 5.0, 12)
    assert "-0.00" not in emit_table([row]).decode()


def test_csv_golden(golden):
    assert emit_table([_row_2015()], "csv") == (golden / "table_one_row.csv").read_bytes()


def test_markdown_golden(golden):
    assert emit_table([_row_2015()], "markdown") == (golden / "table_one_row.md").read_bytes()


def test_csv_header_and_sorting():
    r1 = _row_2015()
    r0 = TableRow(**{**r1.__dict__, "year": 2003})
    lines = emit_table([r1, r0]).decode().splitlines()
    assert lines[0] == ",".join(TABLE_COLUMNS)
    assert [l.split(",")[0] for l in lines[1:]] == ["2003", "2015"]


def test_emit_table_deterministic_and_errors():
    rows = [_row_2015()]
    for fmt in ("csv", "json", "markdown"):
        assert emit_table(rows, fmt) == emit_table(rows, fmt)
    with pytest.raises(ValueError):
        emit_table(rows, "xlsx")
    with pytest.raises(ValueError):
        emit_table([], "csv")


def test_json_table_round_trip():
    rows = [_row_2015(), TableRow(2003, 42.65, 41.2, 44.1, 68083.7, 0.6264, 1.48, 0.93, 0.1, 0.02, 2100.0, 3e4, 40)]
    data = emit_table(rows, "json")
    back = parse_table_json(data)
    assert back == sorted(rows, key=lambda r: r.year)
    doc = json.loads(data)
    assert doc["rows"][1]["i_sb_busd"] == pytest.approx(103490.0)


def test_ccdf_plot_data(capped_2000):
    s, _ = capped_2000
    fit = fit_pareto(select_window(empirical_ccdf(s), FitWindow()))
    out = emit_ccdf_plot(s, fit, "data")
    pts = json.loads(out[f"ccdf_points_{s.year}.json"])
    line = json.loads(out[f"ccdf_fit_{s.year}.json"])
    assert pts["kind"] == "ccdf-points" and line["kind"] == "ccdf-fitline"
    assert len(pts["x"]) == len(np.unique(s.assets))
    assert len(line["x"]) == 100
    assert line["x"][0] == pytest.approx(s.assets.min())
    assert line["x"][-1] == pytest.approx((s.n * fit.c) ** (1 / fit.b))
    assert max(line["y"]) <= 1.0
    assert all(v > 0 for v in line["x"] + line["y"] + pts["x"] + pts["y"])


def test_fit_line_clamps_to_one():
    # fit with c = 1, b = 1 crosses p = 1 at x = 1; the line starts below it
    s = Snapshot.from_assets(2000, np.geomspace(0.1, 100, 50))
    fit = ParetoFit(0.0, 1.0, 0.0, 0.0, 10, FitWindow(), 0.0, 0.0)
    line = json.loads(emit_ccdf_plot(s, fit, "data")["ccdf_fit_2000.json"])
    xs, ys = np.array(line["x"]), np.array(line["y"])
    assert np.all(ys[xs <= 1.0] == 1.0)
    assert np.all(ys[xs > 1.0] < 1.0)


def test_ccdf_svg_golden(golden):
    s, _ = capped_pareto_sample(SynthConfig(n=300, b=0.9, x_min=1.0, cap=300.0, seed=17, year=2010))
    fit = fit_pareto(select_window(empirical_ccdf(s), FitWindow("assets", 2.0, 100.0)))
    out = emit_ccdf_plot(s, fit, "svg")
    assert out["ccdf_2010.svg"] == (golden / "ccdf_2010.svg").read_bytes()


def test_timeseries_without_overlay():
    rows = [_row_2015()]
    out = emit_timeseries(rows)
    assert set(out) == {"isb_timeseries.json", "isb_timeseries.svg"}
    doc = json.loads(out["isb_timeseries.json"])
    assert doc["x"] == [2015] and doc["y_lo"] == [100.7]


def test_timeseries_with_overlay():
    overlay = "year,value_tusd,label\n" + "".join(f"{y},{30 + y - 2003},FSB\n" for y in range(2003, 2015))
    rows = [TableRow(**{**_row_2015().__dict__, "year": y}) for y in (2013, 2014, 2015)]
    out = emit_timeseries(rows, [overlay.encode()])
    assert set(out) == {"isb_timeseries.json", "overlay_1_fsb.json", "isb_timeseries.svg"}
    ov = json.loads(out["overlay_1_fsb.json"])
    assert ov["kind"] == "external-overlay" and ov["label"] == "FSB"
    assert ov["x"] == list(range(2003, 2015))
    assert json.loads(out["isb_timeseries.json"])["x"] == [2013, 2014, 2015]


def test_timeseries_rejects_unsorted_rows():
    rows = [TableRow(**{**_row_2015().__dict__, "year": y}) for y in (2015, 2014)]
    with pytest.raises(ValueError):
        emit_timeseries(rows)


@pytest.mark.parametrize(
    "text,line",
    [
        ("year,value\n2003,1\n", "line 1"),
        ("year,value_tusd,label\n2003,1,FSB\n2004,abc,FSB\n", "line 3"),
        ("year,value_tusd,label\n2003,1,FSB\n2004,2\n", "line 3"),
        ("year,value_tusd,label\n2004,1,FSB\n2003,2,FSB\n", "line 3"),
    ],
)
def test_malformed_overlay_names_line(text, line):
    with pytest.raises(SchemaError, match=line):
        parse_overlay(text.encode())


def test_pipeline_three_years_match_single_year(three_year_csv):
    res = run_pipeline(three_year_csv)
    assert sorted(res.estimates) == [2013, 2014, 2015]
    assert not res.failures
    for y, est in res.estimates.items():
        single = run_pipeline(three_year_csv, years=[y]).estimates[y]
        assert single == est


def test_pipeline_equals_manual_chain(three_year_csv):
    res = run_pipeline(three_year_csv, window=FitWindow("assets", 20, 2000), cutoff=2500.0)
    snap = parse_dataset(three_year_csv).snapshots[2014]
    pts = empirical_ccdf(snap)
    fit = fit_pareto(select_window(pts, FitWindow("assets", 20, 2000)))
    manual = missing_mass(snap, fit, 2500.0, "corners", pts)
    assert res.estimates[2014].to_dict() == manual.to_dict()
    assert res.config["window"] == {"mode": "assets", "lo": 20, "hi": 2000}
    assert res.config["cutoff"] == 2500.0


def test_pipeline_single_year():
    data = emit_dataset(_capped_years([2010]).values())
    res = run_pipeline(data, years=[2010])
    assert list(res.estimates) == [2010]


def test_pipeline_missing_years_and_empty_run(three_year_csv):
    res = run_pipeline(three_year_csv, years=range(2003, 2016))
    assert res.missing_years == list(range(2003, 2013))
    assert sorted(res.estimates) == [2013, 2014, 2015]
    with pytest.raises(EmptyRunError):
        run_pipeline(three_year_csv, years=[1999])


def test_pipeline_isolates_year_failures():
    snaps = _capped_years([2013, 2014])
    snaps[2015] = Snapshot.from_assets(2015, [1.0, 2.0, 3.0])
    res = run_pipeline(snaps)
    assert sorted(res.estimates) == [2013, 2014]
    assert "InsufficientDataError" in res.failures[2015]
    assert res.to_dict()["failures"] == {"2015": res.failures[2015]}


def test_pipeline_matches_estimate_year(three_year_csv):
    snap = parse_dataset(three_year_csv).snapshots[2013]
    assert run_pipeline(three_year_csv).estimates[2013] == estimate_year(snap)
