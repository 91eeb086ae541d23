from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np
from fbmi import __version__
from fbmi.reports import RunManifest, read_report, write_csv, write_report, write_vector


class TestWriteReport:
    def test_tags_and_numpy_values(self, tmp_path: Path) -> None:
        path = write_report(
            tmp_path / "spectrum.json",
            "spectrum",
            {"eigenvalues": np.array([0.0, 1.5]), "count": np.int64(2), "cluster": (1, 2)},
        )
        data = read_report(path)
        assert data["schema_version"] == 1
        assert data["kind"] == "spectrum"
        assert data["eigenvalues"] == [0.0, 1.5]
        assert data["count"] == 2
        assert data["cluster"] == [1, 2]

    def test_nested_keys_become_strings(self, tmp_path: Path) -> None:
        path = write_report(tmp_path / "r.json", "test", {"by_index": {1: np.float64(0.5)}})
        assert read_report(path)["by_index"] == {"1": 0.5}


class TestWriteCsv:
    def test_lists_are_json_encoded(self, tmp_path: Path) -> None:
        path = write_csv(
            tmp_path / "rows.csv",
            [{"index": 0, "cluster": [0]}, {"index": 1, "cluster": np.array([1, 2])}],
        )
        with path.open() as f:
            rows = list(csv.DictReader(f))
        assert [row["index"] for row in rows] == ["0", "1"]
        assert json.loads(rows[1]["cluster"]) == [1, 2]

    def test_empty(self, tmp_path: Path) -> None:
        path = write_csv(tmp_path / "empty.csv", [])
        assert path.read_text().strip() == ""


class TestWriteVector:
    def test_format(self, tmp_path: Path) -> None:
        path = write_vector(tmp_path / "v0.txt", np.array([0.1, -2.0]), header="v0")
        lines = path.read_text().splitlines()
        assert lines[0] == "# v0"
        assert lines[1] == "0 0.10000000000000001"
        assert lines[2] == "1 -2"


class TestRunManifest:
    def test_inputs_are_hashed(self, tmp_path: Path) -> None:
        source = tmp_path / "mesh.off"
        source.write_text("OFF\n")
        manifest = RunManifest(command="mesh-info", parameters={"mesh": str(source)})
        manifest.add_input(source)
        assert manifest.inputs[str(source)] == hashlib.sha256(b"OFF\n").hexdigest()

    def test_write_lists_itself(self, tmp_path: Path) -> None:
        manifest = RunManifest(command="spectrum")
        manifest.add_output(tmp_path / "spectrum.json")
        path = manifest.write(tmp_path)
        data = read_report(path)
        assert data["kind"] == "manifest"
        assert data["command"] == "spectrum"
        assert data["version"] == __version__
        assert data["outputs"] == [str(tmp_path / "spectrum.json"), str(path)]
        assert data["timings"]["total"] >= 0.0
