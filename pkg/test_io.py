"""
Tests for matrix files, activation manifests, spec documents, model
directories and JSON reports.
"""

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from core.errors import (
    BadMagic, ConfigParseError, DimMismatch, DuplicateEntry, ExampleCountMismatch, InvalidMatrix,
    ManifestParseError, MissingFile, NonNumericCell, TruncatedPayload
)
from core.models import ActivityMatrix, SimulationSpec
from repositories.activation_repository import ActivationRepository, group_by_layer, natural_key
from repositories.matrix_repository import (
    HEADER, MAGIC, MatrixRepository, decode_matrix, encode_matrix, parse_csv_matrix
)
from repositories.model_repository import ModelRepository
from repositories.report_repository import (
    ReportRepository, build_report, conventions_block, dumps_report, without_timestamp
)
from repositories.spec_repository import SpecRepository, parse_spec_document
from services.srm_service import fit_srm
from testing_support import expect_raises, main_for, mixed_networks, rng, temp_dir, write_manifest


def test_binary_round_trip_is_bitwise():
    generator = rng(1)
    repo = MatrixRepository()
    with temp_dir() as d:
        for trial in range(1000):
            rows, cols = (int(v) for v in generator.integers(1, 40, size=2))
            m = generator.standard_normal((rows, cols)) * 10.0 ** generator.integers(-300, 300)
            path = repo.write_matrix(m, d / f"m{trial}.amat", "binary")
            back = repo.read_matrix(path)
            assert back.shape == m.shape
            assert back.tobytes() == m.tobytes(), f"trial {trial}"


def test_binary_header_layout():
    data = encode_matrix(np.array([[1.0, 2.0, 3.0]]))
    assert data[:4] == MAGIC
    assert data[4] == 1
    assert HEADER.unpack_from(data, 5) == (1, 3)
    assert len(data) == 13 + 24


def test_binary_truncated_payload():
    data = MAGIC + bytes([1]) + HEADER.pack(2, 2) + np.array([1.0, 2.0, 3.0], dtype='<f8').tobytes()
    with expect_raises(TruncatedPayload, "3 values"):
        decode_matrix(data)
    with expect_raises(TruncatedPayload):
        decode_matrix(MAGIC + bytes([1]) + b"\x02")


def test_binary_bad_magic_and_version():
    good = encode_matrix(np.eye(2))
    with expect_raises(BadMagic):
        decode_matrix(b"XMAT" + good[4:])
    with expect_raises(BadMagic, "version"):
        decode_matrix(good[:4] + bytes([2]) + good[5:])


def test_binary_excess_bytes_and_zero_dims():
    good = encode_matrix(np.eye(2))
    with expect_raises(DimMismatch, "beyond dims"):
        decode_matrix(good + b"\x00" * 8)
    with expect_raises(DimMismatch):
        decode_matrix(MAGIC + bytes([1]) + HEADER.pack(0, 3))


def test_binary_rejects_non_finite():
    data = MAGIC + bytes([1]) + HEADER.pack(1, 2) + np.array([1.0, np.nan], dtype='<f8').tobytes()
    with expect_raises(InvalidMatrix):
        decode_matrix(data)


def test_csv_with_comment_header():
    m = parse_csv_matrix("# units x examples\n1, 2, 3\n\n4,5,6\n")
    assert np.array_equal(m, [[1, 2, 3], [4, 5, 6]])


def test_csv_non_numeric_cell_names_position():
    with expect_raises(NonNumericCell, "line 3, column 2") as caught:
        parse_csv_matrix("# header\n1,2\n3,abc\n", "acts.csv")
    assert "acts.csv" in str(caught["error"])
    with expect_raises(NonNumericCell):
        parse_csv_matrix("1,inf\n")


def test_csv_ragged_and_empty():
    with expect_raises(DimMismatch, "line 2"):
        parse_csv_matrix("1,2,3\n4,5\n")
    with expect_raises(DimMismatch):
        parse_csv_matrix("# only a comment\n")


def test_csv_round_trip_is_exact():
    m = rng(2).standard_normal((7, 5)) * 1e-3
    repo = MatrixRepository()
    with temp_dir() as d:
        path = repo.write_matrix(m, d / "m.csv", "csv", header="7 x 5")
        assert path.read_text().startswith("# 7 x 5")
        assert np.array_equal(repo.read_matrix(path), m)


def test_read_missing_matrix():
    with temp_dir() as d:
        with expect_raises(MissingFile):
            MatrixRepository().read_matrix(d / "absent.amat")


def test_manifest_ingest_ten_networks():
    mats = mixed_networks(6, 12, 10, seed=3)
    with temp_dir() as d:
        write_manifest(d, mats)
        loaded = ActivationRepository().ingest_activations(d)
    assert [a.network_id for a in loaded] == [f"net{i}" for i in range(10)]
    for a, b in zip(mats, loaded):
        assert np.array_equal(a.data, b.data)


def test_manifest_natural_sort_and_layers():
    assert sorted(["net10", "net2", "net1"], key=natural_key) == ["net1", "net2", "net10"]
    mats = mixed_networks(4, 6, 3, seed=4, layer="layer2") + mixed_networks(5, 8, 2, seed=5, layer="layer1")
    with temp_dir() as d:
        write_manifest(d, list(reversed(mats)), fmt="csv")
        repo = ActivationRepository()
        loaded = repo.ingest_activations(d)
        only = repo.ingest_activations(d, layer="layer2")
        with expect_raises(ManifestParseError, "layer9"):
            repo.ingest_activations(d, layer="layer9")
    assert [(a.layer_id, a.network_id) for a in loaded][:2] == [("layer1", "net0"), ("layer1", "net1")]
    assert list(group_by_layer(loaded)) == ["layer1", "layer2"]
    assert [a.network_id for a in only] == ["net0", "net1", "net2"]


def test_manifest_duplicate_entry():
    mats = mixed_networks(4, 6, 2, seed=6)
    with temp_dir() as d:
        manifest = write_manifest(d, mats)
        manifest.write_text(manifest.read_text() + "net0, layer1, layer1_net1.amat\n")
        with expect_raises(DuplicateEntry, "lines 2 and 4"):
            ActivationRepository().ingest_activations(d)


def test_manifest_example_count_mismatch_names_both_files():
    mats = [
        ActivityMatrix("net0", "layer1", rng(7).standard_normal((4, 10))),
        ActivityMatrix("net1", "layer1", rng(8).standard_normal((4, 11))),
    ]
    with temp_dir() as d:
        write_manifest(d, mats)
        with expect_raises(ExampleCountMismatch) as caught:
            ActivationRepository().ingest_activations(d)
    message = str(caught["error"])
    assert "layer1_net0.amat" in message and "layer1_net1.amat" in message


def test_manifest_layers_differing_in_case_stay_separate():
    mats = [
        ActivityMatrix("net0", "L1", rng(9).standard_normal((4, 10))),
        ActivityMatrix("net1", "l1", rng(10).standard_normal((4, 12))),
        ActivityMatrix("net2", "L1", rng(11).standard_normal((4, 11))),
    ]
    with temp_dir() as d:
        write_manifest(d, mats)
        with expect_raises(ExampleCountMismatch, "layer 'L1'") as caught:
            ActivationRepository().ingest_activations(d)
        message = str(caught["error"])
        assert "L1_net0.amat" in message and "L1_net2.amat" in message

        write_manifest(d, [mats[0], mats[1], ActivityMatrix("net2", "L1", rng(12).standard_normal((4, 10)))])
        loaded = ActivationRepository().ingest_activations(d)
    assert [(a.layer_id, a.network_id) for a in loaded] == [("L1", "net0"), ("L1", "net2"), ("l1", "net1")]
    assert list(group_by_layer(loaded)) == ["L1", "l1"]


def test_manifest_missing_file_names_entry():
    with temp_dir() as d:
        (d / "manifest.txt").write_text("net0, layer1, gone.amat\n")
        with expect_raises(MissingFile, "network 'net0'"):
            ActivationRepository().ingest_activations(d)
        with expect_raises(MissingFile):
            ActivationRepository().ingest_activations(d, manifest="other.txt")


def test_manifest_malformed_lines():
    with temp_dir() as d:
        (d / "manifest.txt").write_text("# comment\nnet0, layer1\n")
        with expect_raises(ManifestParseError, "line 2"):
            ActivationRepository().ingest_activations(d)
        (d / "manifest.txt").write_text("net 0, layer1, a.amat\n")
        with expect_raises(ManifestParseError, "network_id"):
            ActivationRepository().ingest_activations(d)
        (d / "manifest.txt").write_text("# nothing\n")
        with expect_raises(ManifestParseError, "no entries"):
            ActivationRepository().ingest_activations(d)


def test_spec_document_parse():
    values = parse_spec_document("# sim\nn = 32\nm=256\nfamily = permutation\nnoise = 0.1\nk = auto\n")
    assert values == {
        "units": 32, "examples": 256, "transform_family": "permutation", "noise_sigma": 0.1, "k": None,
    }


def test_spec_document_errors_carry_line_number():
    with expect_raises(ConfigParseError, "line 2") as caught:
        parse_spec_document("units = 8\nthis is not valid\n")
    assert caught["error"].line_number == 2
    with expect_raises(ConfigParseError, "line 1"):
        parse_spec_document("colour = red\n")
    with expect_raises(ConfigParseError, "line 3"):
        parse_spec_document("runs = 2\n\nruns = 3\n")
    with expect_raises(ConfigParseError, "integer"):
        parse_spec_document("units = 8.5\n")


def test_spec_repository_round_trip_and_relative_source():
    spec = SimulationSpec(units=12, examples=40, networks=3, noise_sigma=0.25, k=5, seed=9)
    repo = SpecRepository()
    with temp_dir() as d:
        path = repo.write_spec(spec, d / "spec.txt")
        assert repo.load_spec(path) == spec
        (d / "sub").mkdir()
        (d / "sub" / "source.txt").write_text("source = supplied-matrix\nsource_path = h.amat\n")
        loaded = repo.load_spec(d / "sub" / "source.txt")
        assert loaded.source_path == str(d / "sub" / "h.amat")


def test_model_save_load_round_trip():
    mats = mixed_networks(8, 30, 3, seed=10, noise=0.1)
    model = fit_srm(mats, k=4)
    repo = ModelRepository()
    for fmt in ("binary", "csv"):
        with temp_dir() as d:
            meta_path = repo.save_model(model, d / "model", fmt)
            meta = json.loads(meta_path.read_text())
            assert meta["files"]["transforms"][0] == MatrixRepository.file_name("W_000", fmt)
            loaded = repo.load_model(d / "model")
        assert loaded.network_ids == model.network_ids
        assert loaded.k == 4 and loaded.layer_id == "layer1"
        assert loaded.fit_trace == model.fit_trace
        assert np.array_equal(loaded.shared, model.shared)
        for a, b in zip(loaded.transforms, model.transforms):
            assert np.array_equal(a, b)


def test_model_load_detects_shape_mismatch():
    model = fit_srm(mixed_networks(6, 20, 2, seed=11), k=3)
    repo = ModelRepository()
    with temp_dir() as d:
        repo.save_model(model, d, "binary")
        MatrixRepository().write_matrix(np.ones((2, 20)), d / "S.amat", "binary")
        with expect_raises(DimMismatch, "k=3"):
            repo.load_model(d)
        (d / "model.json").write_text("{not json")
        with expect_raises(ManifestParseError):
            repo.load_model(d)


def test_report_is_deterministic_apart_from_timestamp():
    spec = SimulationSpec(runs=2).to_dict()
    metrics = {"shared_pearson": np.float64(0.99), "nan_value": float("nan"), "pairs": np.array([1.0, 2.0])}
    a = build_report("simulate", spec, metrics, conventions_block(), seed=0)
    b = build_report("simulate", spec, metrics, conventions_block(), seed=0, generated_at="2000-01-01T00:00:00+00:00")
    assert without_timestamp(a) == without_timestamp(b)
    assert a != b
    assert list(a) == ["schema_version", "command", "spec", "metrics", "conventions", "provenance"]
    assert a["metrics"]["nan_value"] is None
    assert a["metrics"]["pairs"] == [1.0, 2.0]
    assert '"nan_value": null' in dumps_report(b)


def test_report_repository_write_read():
    report = build_report("fit", {"k": 3}, {"iterations": 4}, conventions_block(), seed=1)
    repo = ReportRepository()
    with temp_dir() as d:
        path = repo.write_report(report, d / "out" / "report.json")
        assert repo.read_report(path) == json.loads(dumps_report(report))
        assert [p.name for p in (d / "out").iterdir()] == ["report.json"]


if __name__ == "__main__":
    main_for(globals(), "IO TESTS")
