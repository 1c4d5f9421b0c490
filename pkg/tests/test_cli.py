import csv
import filecmp
import shutil

import pytest

from cascadex.cli import main

SYNTH = ["--seed", "42", "--n-real", "400", "--n-trolls", "8", "--n-urls", "8",
         "--tree-size-max", "60", "--noise-events", "1500"]
ANALYSIS = ["--min-distinct-sharers", "5", "--viral-size", "20"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    out = tmp_path_factory.mktemp("built")
    assert main(["synth", "--out", str(out), *SYNTH]) == 0
    assert main(["build", "--out", str(out), "--events", str(out / "events.tsv"),
                 "--registry", str(out / "trolls.txt")]) == 0
    return out


def fresh(built, tmp_path):
    out = tmp_path / "w"
    shutil.copytree(built, out)
    return out


def test_cascades_before_build(tmp_path, capsys):
    assert main(["cascades", "--out", str(tmp_path)]) == 2
    assert str(tmp_path / "graph.igr") in capsys.readouterr().err


def test_invalid_config_exit_1(tmp_path):
    assert main(["degrees", "--out", str(tmp_path), "--workers", "0"]) == 1
    assert main(["degrees", "--out", str(tmp_path), "--viral-size", "-3"]) == 1
    assert main(["nonsense"]) == 1
    assert main(["build", "--out", str(tmp_path)]) == 1          # no --events


def test_missing_events_file_exit_2(tmp_path, capsys):
    assert main(["build", "--out", str(tmp_path), "--events", str(tmp_path / "x.tsv"),
                 "--registry", str(tmp_path / "r.txt")]) == 2
    assert "x.tsv" in capsys.readouterr().err


def test_all_bad_lines_is_data_error(tmp_path):
    (tmp_path / "e.tsv").write_text("garbage\n")
    (tmp_path / "r.txt").write_text("a\n")
    assert main(["build", "--out", str(tmp_path / "o"), "--events", str(tmp_path / "e.tsv"),
                 "--registry", str(tmp_path / "r.txt")]) == 3


def test_corrupt_snapshot_is_data_error(built, tmp_path, capsys):
    out = fresh(built, tmp_path)
    data = (out / "graph.igr").read_bytes()
    (out / "graph.igr").write_bytes(data[:100])
    assert main(["degrees", "--out", str(out)]) == 3
    assert "offset" in capsys.readouterr().err


def test_build_artifacts(built):
    for name in ("graph.igr", "shares.csv", "troll_urls.csv", "build_summary.csv", "troll_actions.csv",
                 "collection.csv", "group_counts.csv", "parse_errors.csv"):
        assert (built / name).is_file()
    assert rows(built / "troll_actions.csv")[0] == ["action", "total", "target_trolls", "target_real_users"]
    assert [r[0] for r in rows(built / "collection.csv")[1:]] == ["user_ids", "total_events", "replies", "mentions"]


def test_stage_prerequisites(built, tmp_path, capsys):
    out = fresh(built, tmp_path)
    assert main(["topk", "--out", str(out)]) == 2
    assert "coreness.csv" in capsys.readouterr().err
    assert main(["influence", "--out", str(out)]) == 2
    assert main(["degrees", "--out", str(out), "--graph", "region"]) == 2
    assert main(["correlate", "--out", str(out)]) == 1          # --scores missing


def test_each_stage_runs_in_sequence(built, tmp_path, capsys):
    out = fresh(built, tmp_path)
    for stage in ("degrees", "components", "kcore", "region", "cascades", "virality", "influence",
                  "ablate", "topk"):
        assert main([stage, "--out", str(out), *ANALYSIS]) == 0, stage
    printed = capsys.readouterr().out
    assert printed.splitlines()[0].startswith("Metrics")
    labels = [r[0] for r in rows(out / "topk.csv")[1:]]
    assert labels == ["Popularity: in-degree > 10^3", "Sociability: out-degree > 10^3",
                      "Nodes in the largest k-core", 'Source node ("patient-zero"): Number of cascades',
                      "Source node: number of cascades with cascade size > 20", "influence-degree > 10^3"]
    assert main(["kcore", "--out", str(out), "--graph", "region"]) == 0
    assert (out / "region_coreness.csv").is_file()
    assert main(["correlate", "--out", str(out), "--scores", str(out / "scores.csv"),
                 "--influence-threshold", "0"]) == 0
    stats = {r[0]: r for r in rows(out / "correlation.csv")[1:]}
    assert int(stats["n"][1]) >= 3


def test_ccdf_flag(built, tmp_path):
    out = fresh(built, tmp_path)
    assert main(["degrees", "--out", str(out)]) == 0
    geq = rows(out / "degree_ccdf.csv")
    assert main(["degrees", "--out", str(out), "--ccdf-gt"]) == 0
    gt = rows(out / "degree_ccdf.csv")
    assert geq[1][-1] == "1.0" and gt != geq


def test_report_deterministic_across_workers(built, tmp_path):
    dirs = []
    for w in ("1", "4"):
        out = tmp_path / f"r{w}"
        shutil.copytree(built, out)
        assert main(["report", "--out", str(out), "--scores", str(out / "scores.csv"),
                     "--workers", w, *ANALYSIS]) == 0
        dirs.append(out)
    cmp = filecmp.dircmp(*dirs)
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    assert (dirs[0] / "report.txt").read_text().count("== ") >= 10


def test_report_needs_build(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path)]) == 2
    assert "graph.igr" in capsys.readouterr().err
