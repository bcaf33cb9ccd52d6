import io
import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbindex.errors import SchemaError
from sbindex.ingest import (
    FirmRecord,
    Snapshot,
    dump_snapshots,
    emit_dataset,
    load_snapshots,
    parse_dataset,
    total_assets,
    validate_snapshot,
)
from sbindex.synth import SynthConfig, pareto_sample

HEADER = "year,rank,company,sector,country,assets\n"


def test_header_only_file():
    res = parse_dataset(HEADER.encode())
    assert len(res) == 0
    assert "0 data rows" in res.diagnostics


def test_three_row_fixture_groups_by_year():
    data = HEADER + "2014,1,A,,,10\n2014,2,B,,,20\n2015,1,C,,,5\n"
    res = parse_dataset(data.encode())
    assert sorted(res.snapshots) == [2014, 2015]
    assert res.snapshots[2014].n == 2
    assert res.snapshots[2015].n == 1
    assert [r.name for r in res.snapshots[2014].records] == ["A", "B"]
    assert res.snapshots[2014].records[1].assets == 20.0


def test_bad_rows_are_skipped_with_diagnostics():
    data = HEADER + "2014,1,A,Banks,US,10\n2014,2,B,,,n/a\nTotal,,,,,30\n2014,3,,,,4\n2014,4,D,,,-1\n"
    res = parse_dataset(data.encode())
    assert res.snapshots[2014].n == 1
    assert res.rows_read == 5
    assert res.rows_skipped == 4
    joined = "\n".join(res.diagnostics)
    assert "line 3" in joined and "non-numeric" in joined
    assert "4 row(s) skipped" in res.diagnostics


def test_missing_mandatory_column():
    with pytest.raises(SchemaError, match="assets"):
        parse_dataset(b"year,rank,company\n2014,1,A\n")


def test_unreadable_source(tmp_path):
    with pytest.raises(OSError):
        parse_dataset(tmp_path / "nope.csv")


def test_optional_columns_may_be_absent():
    res = parse_dataset(b"year,company,assets\n2014,A,1.5\n")
    r = res.snapshots[2014].records[0]
    assert (r.rank, r.sector, r.country, r.assets) == (None, None, None, 1.5)


def test_millions_are_exactly_thousandfold_smaller():
    data = HEADER + "2014,1,A,,,1234.5678\n2014,2,B,,,0.1\n2014,3,C,,,98765432.1\n"
    bus = parse_dataset(data.encode(), unit="busd").snapshots[2014]
    mus = parse_dataset(data.encode(), unit="musd").snapshots[2014]
    for rb, rm in zip(bus.records, mus.records):
        assert rm.assets == rb.assets / 1000.0


def test_unknown_unit():
    with pytest.raises(ValueError):
        parse_dataset(HEADER.encode(), unit="eur")


def test_record_invariants():
    with pytest.raises(ValueError):
        FirmRecord(year=2014, name="", assets=1.0)
    with pytest.raises(ValueError):
        FirmRecord(year=1800, name="x", assets=1.0)
    with pytest.raises(ValueError):
        FirmRecord(year=2014, name="x", assets=-1.0)
    with pytest.raises(ValueError):
        Snapshot(2014, (FirmRecord(year=2015, name="x", assets=1.0),))


def test_validate_flags_zero_asset():
    s = Snapshot.from_assets(2014, [0.0, 1.0, 2.0])
    rep = validate_snapshot(s, expected_n=3)
    assert rep.violations == ["1 non-positive asset value(s)"]
    assert rep.warnings == []


def test_validate_clean_synthetic_snapshot():
    s = pareto_sample(SynthConfig(n=2000, seed=3))
    rep = validate_snapshot(s)
    assert rep.ok and rep.violations == [] and rep.warnings == []


def test_validate_n_deviation():
    s = pareto_sample(SynthConfig(n=1999, seed=3))
    assert validate_snapshot(s).warnings == ["n deviates from 2000 by 1"]


def test_validate_duplicates_is_not_fatal():
    recs = (FirmRecord(2014, "A", 1.0), FirmRecord(2014, "A", 2.0))
    rep = validate_snapshot(Snapshot(2014, recs), expected_n=2)
    assert len(rep.violations) == 1 and "duplicate" in rep.violations[0]


def test_validate_is_pure():
    s = Snapshot.from_assets(2014, [0.0, 1.0])
    before = s.records
    validate_snapshot(s)
    assert s.records is before


def test_total_assets_small():
    assert total_assets(Snapshot.from_assets(2014, [1.0, 2.0, 3.0])) == 6.0


def test_total_assets_against_compensated_sum():
    s = pareto_sample(SynthConfig(n=2000, seed=42))
    exact = math.fsum(s.assets)
    assert abs(total_assets(s) - exact) <= 1e-12 * exact


def test_total_assets_permutation_invariant():
    s = pareto_sample(SynthConfig(n=2000, seed=5))
    vals = list(s.assets)
    rng = random.Random(0)
    ref = total_assets(s)
    for _ in range(5):
        rng.shuffle(vals)
        assert abs(total_assets(Snapshot.from_assets(2000, vals)) - ref) <= 1e-12 * ref


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1e7, allow_nan=False), min_size=1, max_size=40))
def test_csv_round_trip(values):
    snaps = [Snapshot.from_assets(2014, values), Snapshot.from_assets(2015, values[::-1])]
    back = parse_dataset(emit_dataset(snaps)).snapshots
    for s in snaps:
        assert back[s.year] == s
        assert np.array_equal(back[s.year].assets, s.assets)


def test_json_round_trip():
    snaps = [pareto_sample(SynthConfig(n=50, seed=i, year=2003 + i)) for i in range(3)]
    text = dump_snapshots(snaps)
    doc = json.loads(text)
    assert [d["year"] for d in doc] == [2003, 2004, 2005]
    assert set(doc[0]["records"][0]) == {"name", "assets", "rank"}
    back = load_snapshots(text.encode())
    for s in snaps:
        assert back[s.year] == s


def test_json_count_mismatch():
    doc = [{"year": 2014, "n": 3, "records": [{"name": "A", "assets": 1.0}]}]
    with pytest.raises(SchemaError):
        load_snapshots(json.dumps(doc).encode())


def test_parse_from_text_stream():
    res = parse_dataset(io.StringIO(HEADER + "2014,1,A,,,10\n"))
    assert res.snapshots[2014].n == 1
