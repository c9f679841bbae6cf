"""Command-line surface: exit codes, artifact layout, override plumbing,
and the reporting helpers behind the `report` subcommand."""

import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import toy_graph

from duoteach.cli import ABLATION_MODES, main
from duoteach.config import OUT_ROOT_ENV, derive_seed, load_config, resolve_dataset
from duoteach.graphs import MaskSpec, apply_masks, load_bundle, make_splits
from duoteach.ppr import build_enhanced_adjacency
from duoteach.reporting import (
    build_grid,
    collect_results,
    render_text,
    run_summary,
)
from duoteach.sparsemat import SparseRowMatrix
from duoteach.synth import write_edgelist_files


@pytest.fixture(scope="module")
def data_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    g = toy_graph(n=30, seed=3, classes=2, d=6)
    g.labels = np.arange(30) % 2
    g.features += g.labels[:, None] * 0.5
    write_edgelist_files(root / "toy", g)
    return root


@pytest.fixture(scope="module")
def config_path(tmp_path_factory, data_root):
    blob = {
        "dataset": "toy", "data_root": str(data_root),
        "mode": "full", "backbone": "gcn", "n_splits": 2, "seed": 11,
        "hidden": 16, "feature_hidden": 16, "dropout": 0.3,
        "mask": {"feature_missing_rate": 0.3, "edge_missing_rate": 0.3},
        "ppr": {"top_k": 3},
        "distill": {"lam": 0.5, "rho": 2.0, "rho_prime": 0.5},
        "train": {"lr": 0.01, "max_epochs": 8, "patience": 3},
    }
    path = tmp_path_factory.mktemp("cfg") / "toy.json"
    path.write_text(json.dumps(blob))
    return str(path)


def read_result(out_dir):
    with open(out_dir / "result.json") as f:
        return json.load(f)


# -- run ------------------------------------------------------------------------


def test_run_writes_result_files_and_summary(config_path, tmp_path, capsys):
    assert main(["run", "-c", config_path, "--out", str(tmp_path)]) == 0
    blob = read_result(tmp_path)
    for key in ("accuracies", "val_accuracies", "chosen_epochs",
                "mean", "std", "config", "wall_clock"):
        assert key in blob
    assert len(blob["accuracies"]) == 2
    summary = (tmp_path / "result.txt").read_text()
    assert summary == run_summary(blob)
    assert capsys.readouterr().out == summary
    assert "test accuracy:" in summary


def test_run_twice_is_identical_except_wall_clock(config_path, tmp_path):
    for name in ("a", "b"):
        assert main(["run", "-c", config_path, "--out", str(tmp_path / name)]) == 0
    texts = []
    for name in ("a", "b"):
        lines = (tmp_path / name / "result.json").read_text().splitlines()
        texts.append("\n".join(l for l in lines if "wall_clock" not in l))
    assert texts[0] == texts[1]


def test_set_overrides_reach_the_config(config_path, tmp_path):
    assert main(["run", "-c", config_path, "--out", str(tmp_path),
                 "--set", "seed=123", "--set", "distill.lam=0.9",
                 "--set", "mode=student_only"]) == 0
    cfg = read_result(tmp_path)["config"]
    assert cfg["seed"] == 123
    assert cfg["distill"]["lam"] == 0.9
    assert cfg["mode"] == "student_only"


def test_jobs_flag_lands_in_the_config(config_path, tmp_path):
    assert main(["run", "-c", config_path, "--out", str(tmp_path),
                 "--jobs", "1"]) == 0
    assert read_result(tmp_path)["config"]["jobs"] == 1


def test_out_root_env_prefixes_relative_dirs(config_path, tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ROOT_ENV, str(tmp_path / "root"))
    assert main(["run", "-c", config_path, "--out", "rel"]) == 0
    assert (tmp_path / "root" / "rel" / "result.json").exists()
    # absolute paths ignore the env root
    assert main(["run", "-c", config_path, "--out", str(tmp_path / "abs")]) == 0
    assert (tmp_path / "abs" / "result.json").exists()
    assert not (tmp_path / "root" / str(tmp_path)[1:].replace("/", "_")).exists()


# -- exit codes -------------------------------------------------------------------


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["run", "-c", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_unparseable_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "-c", str(bad), "--out", str(tmp_path)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_invalid_field_value_exits_2(config_path, tmp_path, capsys):
    code = main(["run", "-c", config_path, "--out", str(tmp_path),
                 "--set", "mask.feature_missing_rate=1.5"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_malformed_override_exits_2(config_path, tmp_path, capsys):
    assert main(["run", "-c", config_path, "--out", str(tmp_path),
                 "--set", "no_equals_sign"]) == 2
    assert "key=value" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_runtime_failure_exits_1(config_path, tmp_path, capsys):
    code = main(["run", "-c", config_path, "--out", str(tmp_path),
                 "--set", "train.lr=1e154"])
    assert code == 1
    err = capsys.readouterr().err
    assert "error:" in err and "split" in err


def test_unwritable_output_exits_1(config_path, tmp_path, capsys):
    code = main(["mask", "-c", config_path,
                 "-o", str(tmp_path / "no_such_dir" / "bundle.json")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_missing_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
    capsys.readouterr()


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    for name in ("run", "sweep", "ablate", "report", "mask", "ppr"):
        assert name in out


def test_console_script_is_installed():
    proc = subprocess.run([sys.executable, "-m", "duoteach.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "duoteach" in proc.stdout


# -- mask / ppr -------------------------------------------------------------------


def test_mask_bundle_matches_library_calls(config_path, tmp_path, capsys):
    out = tmp_path / "bundle.json"
    assert main(["mask", "-c", config_path, "-o", str(out)]) == 0
    g, splits = load_bundle(out)

    cfg = load_config(config_path)
    raw = resolve_dataset(cfg)
    spec = MaskSpec(feature_missing_rate=0.3, edge_missing_rate=0.3,
                    feature_mode=cfg.mask.feature_mode,
                    seed=derive_seed(cfg.seed, "mask", 0))
    want = apply_masks(raw, spec)
    assert np.array_equal(g.features, want.features)
    assert np.array_equal(g.feature_observed, want.feature_observed)
    assert g.adjacency == want.adjacency
    # whole-tensor masking at the configured rate
    assert (~g.feature_observed).sum() == int(0.3 * raw.n * raw.feature_dim)

    want_splits = make_splits(raw, derive_seed(cfg.seed, "splits"), cfg.n_splits)
    assert len(splits) == cfg.n_splits
    for got, exp in zip(splits, want_splits):
        assert got == exp
    capsys.readouterr()


def test_mask_split_index_selects_the_seed(config_path, tmp_path):
    paths = [tmp_path / f"b{i}.json" for i in range(3)]
    assert main(["mask", "-c", config_path, "-o", str(paths[0])]) == 0
    assert main(["mask", "-c", config_path, "-o", str(paths[1]), "--split", "1"]) == 0
    assert main(["mask", "-c", config_path, "-o", str(paths[2]), "--split", "1"]) == 0
    g0, _ = load_bundle(paths[0])
    g1, _ = load_bundle(paths[1])
    assert not np.array_equal(g0.feature_observed, g1.feature_observed)
    assert paths[1].read_bytes() == paths[2].read_bytes()


def test_fixed_mask_ignores_the_split_index(config_path, tmp_path):
    paths = [tmp_path / f"f{i}.json" for i in range(2)]
    for i, path in enumerate(paths):
        assert main(["mask", "-c", config_path, "-o", str(path),
                     "--split", str(i), "--set", "fixed_mask=true"]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_ppr_emits_the_enhanced_adjacency_exactly(config_path, tmp_path):
    out = tmp_path / "enhanced.txt"
    assert main(["ppr", "-c", config_path, "-o", str(out)]) == 0

    cfg = load_config(config_path)
    raw = resolve_dataset(cfg)
    spec = MaskSpec(feature_missing_rate=0.3, edge_missing_rate=0.3,
                    feature_mode=cfg.mask.feature_mode,
                    seed=derive_seed(cfg.seed, "mask", 0))
    want = build_enhanced_adjacency(apply_masks(raw, spec).adjacency, cfg.ppr)

    us, vs, ws = [], [], []
    for line in out.read_text().splitlines():
        u, v, w = line.split()
        us.append(int(u)), vs.append(int(v)), ws.append(float(w))
    got = SparseRowMatrix.from_coo(want.rows, want.cols, us, vs, ws)
    assert got == want
    assert np.allclose(got.to_dense(), got.to_dense().T)


# -- sweep ------------------------------------------------------------------------


GRID = {"distill.lam": [0.0, 0.5]}


def test_sweep_inline_grid_ranks_points(config_path, tmp_path, capsys):
    code = main(["sweep", "-c", config_path, "--out", str(tmp_path),
                 "--grid-json", json.dumps(GRID)])
    assert code == 0
    assert "best by validation:" in capsys.readouterr().out
    with open(tmp_path / "sweep" / "summary.json") as f:
        summary = json.load(f)
    assert len(summary["points"]) == 2
    assert sorted(summary["ranked_by_val"]) == [0, 1]
    assert summary["best_point"] in [p["point"] for p in summary["points"]]
    vals = [p["mean_val"] for p in summary["points"]]
    assert vals[summary["ranked_by_val"][0]] == max(vals)
    for i, point in enumerate(summary["points"]):
        blob = read_result(tmp_path / "sweep" / f"point_{i:03d}")
        assert blob["config"]["distill"]["lam"] == point["point"]["distill.lam"]
        assert blob["mean"] == point["mean_test"]


def test_sweep_grid_file_matches_inline(config_path, tmp_path, capsys):
    grid_file = tmp_path / "grid.json"
    grid_file.write_text(json.dumps(GRID))
    assert main(["sweep", "-c", config_path, "--out", str(tmp_path / "a"),
                 "--grid", str(grid_file)]) == 0
    assert main(["sweep", "-c", config_path, "--out", str(tmp_path / "b"),
                 "--grid-json", json.dumps(GRID)]) == 0
    read = lambda d: (tmp_path / d / "sweep" / "summary.json").read_bytes()
    assert read("a") == read("b")
    capsys.readouterr()


def test_sweep_without_grid_exits_2(config_path, tmp_path, capsys):
    assert main(["sweep", "-c", config_path, "--out", str(tmp_path)]) == 2
    assert "needs --grid" in capsys.readouterr().err


def test_sweep_rejects_non_object_grid(config_path, tmp_path, capsys):
    assert main(["sweep", "-c", config_path, "--out", str(tmp_path),
                 "--grid-json", "[1, 2]"]) == 2
    assert "non-empty JSON object" in capsys.readouterr().err


# -- ablate -----------------------------------------------------------------------


def test_ablate_covers_all_modes_under_shared_masks(config_path, tmp_path, capsys):
    assert main(["ablate", "-c", config_path, "--out", str(tmp_path)]) == 0
    out_lines = capsys.readouterr().out.splitlines()
    assert len(out_lines) == len(ABLATION_MODES)
    with open(tmp_path / "ablate" / "summary.json") as f:
        summary = json.load(f)
    assert sorted(summary) == sorted(ABLATION_MODES)
    for mode in ABLATION_MODES:
        blob = read_result(tmp_path / "ablate" / mode)
        assert blob["config"]["mode"] == mode
        assert blob["config"]["fixed_mask"] is True
        assert summary[mode]["mean"] == blob["mean"]
        assert any(line.startswith(mode) for line in out_lines)


# -- report -----------------------------------------------------------------------


def fake_result(dataset, mode, mean, std=0.01, backbone="gcn"):
    return {
        "accuracies": [mean], "val_accuracies": [mean], "chosen_epochs": [1],
        "mean": mean, "std": std, "wall_clock": 0.0,
        "config": {"dataset": dataset, "backbone": backbone,
                   "mode": mode, "seed": 0},
    }


def write_tree(root, blobs):
    for i, blob in enumerate(blobs):
        d = root / f"r{i}"
        d.mkdir(parents=True)
        with open(d / "result.json", "w") as f:
            json.dump(blob, f)


def test_grid_includes_improvement_rows():
    blobs = [
        fake_result("cora", "full", 0.85),
        fake_result("cora", "student_only", 0.80),
        fake_result("texas", "full", 0.70),
        fake_result("texas", "student_only", 0.60),
    ]
    header, rows = build_grid(blobs)
    assert header == ["method", "cora", "texas", "avg"]
    by_name = {r[0]: r for r in rows}
    assert by_name["gcn/full"][1] == "85.00±1.00"
    assert by_name["gcn/full"][3] == "77.50"
    impv = by_name["+impv (gcn)"]
    assert impv[1:] == ["+5.00", "+10.00", "+7.50"]


def test_grid_marks_missing_cells():
    blobs = [fake_result("cora", "full", 0.85),
             fake_result("texas", "student_only", 0.60)]
    header, rows = build_grid(blobs)
    by_name = {r[0]: r for r in rows}
    assert by_name["gcn/full"][2] == "-"
    assert by_name["gcn/student_only"][1] == "-"
    # no dataset has both runs, so there is no improvement row
    assert "+impv (gcn)" not in by_name


def test_render_text_aligns_columns():
    header, rows = build_grid([fake_result("cora", "full", 0.85)])
    text = render_text(header, rows)
    lines = text.splitlines()
    assert lines[0].startswith("method")
    assert set(lines[1]) <= {"-", " "}
    assert len({line.index("cora") for line in lines[:1]}) == 1
    assert text.endswith("\n")


def test_collect_results_skips_unrelated_json(tmp_path):
    write_tree(tmp_path, [fake_result("cora", "full", 0.85)])
    junk = tmp_path / "junk"
    junk.mkdir()
    with open(junk / "result.json", "w") as f:
        json.dump({"unrelated": True}, f)
    results = collect_results(tmp_path)
    assert len(results) == 1
    assert results[0]["config"]["dataset"] == "cora"


def test_collect_results_failure_modes(tmp_path):
    from duoteach.errors import ConfigError
    with pytest.raises(ConfigError):
        collect_results(tmp_path / "missing")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(ConfigError):
        collect_results(empty)


def test_report_end_to_end(config_path, tmp_path, capsys):
    results = tmp_path / "results"
    for mode in ("full", "student_only"):
        assert main(["run", "-c", config_path, "--out", str(results / mode),
                     "--set", f"mode={mode}"]) == 0
    capsys.readouterr()
    csv_path = tmp_path / "grid.csv"
    assert main(["report", str(results), "--csv", str(csv_path)]) == 0
    out = capsys.readouterr().out
    assert "gcn/full" in out and "gcn/student_only" in out
    assert "+impv (gcn)" in out

    import csv
    with open(csv_path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["method", "toy", "avg"]
    assert len(rows) == 4  # two methods + improvement row + header


def test_report_on_missing_directory_exits_2(tmp_path, capsys):
    assert main(["report", str(tmp_path / "nowhere")]) == 2
    assert "error:" in capsys.readouterr().err
