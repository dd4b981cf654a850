"""Tests for mts/ingest.py — CSV loading and window alignment."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from mts.dataset import RawStay
from mts.errors import AlignmentError, DuplicateRowError, ParseError, SchemaError
from mts.ingest import (
    load_raw_csv,
    read_schema,
    stays_from_dataset,
    window_align,
    window_bounds,
    write_raw_csv,
)
from mts.synth import SynthSpec, generate

COHORT = """id,day,anchor,label,a,b
p1,1,3,1,1.5,
p1,2,3,1,,2
p1,3,3,1,0.5,1
n1,5,5,0,1,1
n1,6,5,0,2,
n1,9,5,0,7,7
"""


@pytest.fixture
def tmp_dir():
    with tempfile.TemporaryDirectory() as d:
        yield d


def write(tmp_dir, text, name="cohort.csv"):
    path = Path(tmp_dir) / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ── Loading ─────────────────────────────────────────────────


class TestLoadRawCsv:
    def test_schema_from_header(self, tmp_dir):
        assert read_schema(write(tmp_dir, COHORT)) == ["a", "b"]

    def test_groups_by_id_in_file_order(self, tmp_dir):
        stays = load_raw_csv(write(tmp_dir, COHORT), ["a", "b"])
        assert [s.id for s in stays] == ["p1", "n1"]
        assert stays[0].days == (1, 2, 3)
        assert stays[0].anchor_day == 3
        assert stays[1].label == 0

    def test_empty_cells_are_nan(self, tmp_dir):
        stays = load_raw_csv(write(tmp_dir, COHORT), ["a", "b"])
        assert np.isnan(stays[0].rows[0, 1])
        assert np.isnan(stays[0].rows[1, 0])
        assert stays[0].rows[2, 0] == 0.5

    def test_rows_sorted_by_day(self, tmp_dir):
        text = "id,day,anchor,label,a\nx,2,1,0,20\nx,1,1,0,10\n"
        stays = load_raw_csv(write(tmp_dir, text), ["a"])
        assert stays[0].days == (1, 2)
        assert stays[0].rows[:, 0].tolist() == [10.0, 20.0]

    def test_missing_column(self, tmp_dir):
        with pytest.raises(SchemaError) as exc:
            load_raw_csv(write(tmp_dir, COHORT), ["a", "b", "c"])
        assert exc.value.column == "c"

    def test_non_numeric_cell_names_row(self, tmp_dir):
        text = "id,day,anchor,label,a\nx,1,1,0,1.0\nx,2,1,0,abc\n"
        with pytest.raises(ParseError) as exc:
            load_raw_csv(write(tmp_dir, text), ["a"])
        assert exc.value.row == 3
        assert exc.value.column == "a"

    def test_duplicate_day(self, tmp_dir):
        text = "id,day,anchor,label,a\nx,1,1,0,1\nx,1,1,0,2\n"
        with pytest.raises(DuplicateRowError):
            load_raw_csv(write(tmp_dir, text), ["a"])

    def test_missing_file(self, tmp_dir):
        with pytest.raises(FileNotFoundError):
            load_raw_csv(str(Path(tmp_dir) / "nope.csv"), ["a"])


# ── Windowing ───────────────────────────────────────────────


class TestWindowAlign:
    def test_bounds(self):
        assert window_bounds(1, 10, 7) == (4, 10)
        assert window_bounds(0, 10, 7) == (10, 16)

    def test_positive_window_ends_at_anchor(self, tmp_dir):
        stays = load_raw_csv(write(tmp_dir, COHORT), ["a", "b"])
        ds = window_align(stays, window_len=3, attribute_names=["a", "b"])
        p1 = ds.records[0]
        assert p1.values.tolist() == [[1.5, 0.0, 0.5], [0.0, 2.0, 1.0]]
        assert p1.mask.tolist() == [[1, 0, 1], [0, 1, 1]]

    def test_negative_window_starts_at_anchor(self, tmp_dir):
        stays = load_raw_csv(write(tmp_dir, COHORT), ["a", "b"])
        ds = window_align(stays, window_len=3, attribute_names=["a", "b"])
        n1 = ds.records[1]
        # day 9 lies outside [5, 7]
        assert n1.values.tolist() == [[1.0, 2.0, 0.0], [1.0, 0.0, 0.0]]
        assert n1.mask.tolist() == [[1, 1, 0], [1, 0, 0]]

    def test_missing_anchor(self):
        stay = RawStay(id="s", days=[1], rows=np.ones((1, 1)), anchor_day=None, label=1)
        with pytest.raises(AlignmentError) as exc:
            window_align([stay], window_len=3)
        assert exc.value.record_id == "s"

    def test_stay_outside_window_is_all_missing(self, caplog):
        stay = RawStay(id="s", days=[50], rows=np.ones((1, 1)), anchor_day=1, label=0)
        ds = window_align([stay], window_len=3)
        assert ds.masks.sum() == 0
        assert "no recorded day" in caplog.text


# ── Round trip ──────────────────────────────────────────────


class TestRoundTrip:
    def test_write_then_load_reproduces_dataset(self, tmp_dir):
        ds, _ = generate(SynthSpec.two_moons(n_per_cluster=5, missing_rate=0.3, seed=2))
        path = str(Path(tmp_dir) / "stays.csv")
        write_raw_csv(stays_from_dataset(ds), ds.attribute_names, path)

        schema = read_schema(path)
        again = window_align(load_raw_csv(path, schema), ds.window_len, attribute_names=schema)
        assert again.same_as(ds)

    def test_cells_parse_exactly(self, tmp_dir):
        rng = np.random.default_rng(11)
        cells = rng.standard_normal((6, 2)) / 3.0
        stay = RawStay(id="s", days=list(range(6)), rows=cells, anchor_day=5, label=1)
        path = str(Path(tmp_dir) / "stays.csv")
        write_raw_csv([stay], ["a", "b"], path)
        again = load_raw_csv(path, ["a", "b"])[0]
        assert np.array_equal(again.rows, cells)
