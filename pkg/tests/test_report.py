from __future__ import annotations

import json
from importlib import resources

import pytest

from atomscreen.errors import ConfigError, NoOverlapError, ReferenceParseError
from atomscreen.potentials import ZetaTruncation
from atomscreen.report import (
    ComputedRow,
    ReferenceRow,
    ReferenceTable,
    build_report,
    computed_as_reference,
    load_reference,
    parse_reference,
    reference_csv,
    write_reference,
    zeta_deviation_map,
    zeta_map_csv,
    zeta_map_summary,
)

DATA = resources.files("atomscreen") / "data"


def test_bundled_ip_table():
    t = load_reference(DATA / "table1.csv")
    assert len(t) == 11
    assert t.value("Li") == 5.39
    assert {r.kind for r in t.rows} == {"IP"}


def test_bundled_level_table():
    t = load_reference(DATA / "table2.csv")
    assert len(t) == 9
    assert t.value("2p", "level") == -3.542
    assert t.value("4f", "level") == -0.848


@pytest.mark.parametrize("text, line, column", [
    ("", None, None),
    ("# only a comment\n", None, None),
    ("label,kind,value\nLi,IP,5.39\n", 1, None),
    ("label,kind,value_eV,source\nLi,IP,5.39\n", 2, None),
    ("label,kind,value_eV,source\nLi,XX,5.39,a\n", 2, "kind"),
    ("label,kind,value_eV,source\nLi,IP,abc,a\n", 2, "value_eV"),
    ("label,kind,value_eV,source\nLi,IP,nan,a\n", 2, "value_eV"),
    ("label,kind,value_eV,source\n,IP,1.0,a\n", 2, "label"),
    ("label,kind,value_eV,source\nLi,IP,5.39,a\n\nLi,IP,5.40,a\n", 4, "label"),
])
def test_parse_errors(text, line, column):
    with pytest.raises(ReferenceParseError) as info:
        parse_reference(text, path="ref.csv")
    assert info.value.line == line
    assert info.value.column == column
    assert "ref.csv" in str(info.value)


def test_same_label_different_sources():
    t = parse_reference("label,kind,value_eV,source\nLi,IP,5.39,a\nLi,IP,5.40,b\nLi,level,-5.3,a\n")
    assert len(t) == 3
    assert t.lookup("Li", "IP", "b").value_eV == 5.40
    with pytest.raises(ConfigError):
        t.lookup("Li", "IP")


def test_round_trip(tmp_path):
    t = ReferenceTable((ReferenceRow("Li", "IP", 5.39, "x"), ReferenceRow("2s", "level", -4.977123456789, "y")))
    path = tmp_path / "t.csv"
    write_reference(t, path)
    assert load_reference(path) == t
    assert parse_reference(reference_csv(t)) == t


def test_quoting_round_trip():
    t = ReferenceTable((ReferenceRow("Li", "IP", 5.39, "NIST, 2020"),))
    assert parse_reference(reference_csv(t)) == t


def _li_rows():
    return [ComputedRow("Li", "IP", 5.50, "v1", 3), ComputedRow("Li", "IP", 4.98, "v2", 3)]


def test_li_deviation():
    rep = build_report(_li_rows(), load_reference(DATA / "table1.csv"))
    row = rep.row("Li", "v1")
    assert row.abs_dev_eV == pytest.approx(0.11, abs=1e-12)
    assert row.rel_dev == pytest.approx(0.11 / 5.39)
    assert rep.max_abs_dev_eV == pytest.approx(0.41)
    assert rep.mean_abs_dev_eV == pytest.approx(0.26)


def test_level_deviation():
    rep = build_report([ComputedRow("2s", "level", -4.977, "v2", 3, 200)], load_reference(DATA / "table2.csv"))
    assert rep.row("2s", "v2", "level").abs_dev_eV == pytest.approx(0.413, abs=1e-12)


def test_self_comparison_is_zero():
    rows = _li_rows() + [ComputedRow("He", "IP", 19.8, "v1", 2)]
    rep = build_report([r for r in rows if r.model == "v1"], computed_as_reference(r for r in rows if r.model == "v1"))
    assert rep.max_abs_dev_eV == 0.0 and rep.mean_abs_dev_eV == 0.0


def test_order_unmatched_and_annotations():
    rows = [ComputedRow("Mg", "IP", 5.97, "v1", 12), ComputedRow("Xx", "IP", 1.0, "v1", 99),
            ComputedRow("He", "IP", 19.8, "v1", 2)] + _li_rows()
    rep = build_report(rows, load_reference(DATA / "table1.csv"))
    assert [(r.label, r.model) for r in rep.rows] == [("He", "v1"), ("Li", "v1"), ("Li", "v2"), ("Mg", "v1")]
    assert [u.label for u in rep.unmatched] == ["Xx"]
    assert "helium" in rep.row("He", "v1").annotation
    assert "magnesium" in rep.row("Mg", "v1").annotation
    assert rep.row("Li", "v1").annotation == ""
    assert set(rep.annotations) == {"He|IP|v1", "Mg|IP|v1"}


def test_no_overlap():
    with pytest.raises(NoOverlapError):
        build_report([ComputedRow("Xx", "IP", 1.0, "v1")], load_reference(DATA / "table1.csv"))


def test_serialization_is_deterministic():
    ref = load_reference(DATA / "table1.csv")
    a = build_report(_li_rows(), ref, metadata={"b": 1, "a": 2})
    b = build_report(list(reversed(_li_rows())), ref, metadata={"a": 2, "b": 1})
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()
    doc = json.loads(a.to_json())
    assert doc["summary"]["n_within_agreement"] == 1
    assert list(doc) == sorted(doc)


def test_zeta_map_examples():
    rows = zeta_deviation_map([3.0, 1.0], [0.01, 1.0, 10.0])
    by = {(r.Z, r.r): r for r in rows}
    far = by[(3.0, 10.0)]
    assert far.zeta_closed == pytest.approx(1.0, abs=1e-12)
    assert far.oracle_active == pytest.approx(1.0, abs=5e-3)
    assert by[(3.0, 1.0)].zeta_closed == pytest.approx(0.9884391, abs=1e-7)
    small = by[(1.0, 0.01)]
    assert small.zeta_closed > 1.0 and small.divergent
    assert small.oracle_active <= 1.0
    assert not by[(3.0, 1.0)].divergent
    assert by[(3.0, 0.01)].divergent  # Z r = 0.03


def test_zeta_map_oracles_in_unit_interval():
    rows = zeta_deviation_map([1.0, 3.0, 10.0], [0.001, 0.02, 0.1, 0.5, 2.0, 20.0], ZetaTruncation(k_max=None))
    for r in rows:
        assert 0.0 < r.oracle_active <= 1.0
        assert 0.0 < r.oracle_passive <= 1.0


def test_zeta_summary_and_csv():
    rows = zeta_deviation_map([3.0], [0.01, 1.0, 5.0])
    s = zeta_map_summary(rows)
    assert s["regular_rows"] == 2 and s["divergent_rows"] == 1
    assert s["reproduces_closed_form"] == "neither"
    assert s["max_abs_gap_active"] > 1e-3
    text = zeta_map_csv(rows)
    assert text.splitlines()[0] == "Z,r,zeta_closed,oracle_active,oracle_passive,divergent"
    assert text.splitlines()[1].endswith(",1")
    assert zeta_map_csv(rows) == zeta_map_csv(zeta_deviation_map([3.0], [0.01, 1.0, 5.0]))


def test_zeta_map_rejects_bad_grid():
    with pytest.raises(ConfigError):
        zeta_deviation_map([3.0], [])
    with pytest.raises(ConfigError):
        zeta_deviation_map([3.0], [1.0, 0.0])
