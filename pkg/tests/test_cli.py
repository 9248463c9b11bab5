import os

import numpy as np
import pytest

from ipbc import load_csv
from ipbc.cli import main

FAST_EMBED = """
[embedding]
n_neighbors = 8
epochs = 30

[ipbc]
rounds = 2
warm_epochs = 10
"""


def write_config(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_metrics(out_dir):
    with open(os.path.join(out_dir, "metrics.csv"), encoding="utf-8") as fh:
        return fh.read()


class TestGen:
    def test_writes_loadable_csv(self, tmp_path):
        out = str(tmp_path / "blobs.csv")
        rc = main(["gen", "--n", "10", "--d", "4", "--k", "3", "--sep", "8",
                   "--noise", "0.5", "--seed", "1", "--out", out])
        assert rc == 0
        ds = load_csv(out, label_column="label")
        assert ds.n == 30 and ds.d == 4
        assert set(ds.labels.tolist()) == {0, 1, 2}

    def test_seed_repeat_identical_bytes(self, tmp_path):
        a = str(tmp_path / "a.csv")
        b = str(tmp_path / "b.csv")
        args = ["gen", "--n", "8", "--d", "3", "--k", "2", "--seed", "4"]
        assert main(args + ["--out", a]) == 0
        assert main(args + ["--out", b]) == 0
        assert open(a, "rb").read() == open(b, "rb").read()

    def test_overlap_center_halving(self, tmp_path):
        out = str(tmp_path / "ov.csv")
        rc = main(["gen", "--n", "100", "--d", "10", "--k", "3", "--sep", "10",
                   "--noise", "1.0", "--overlap", "1,2", "--seed", "1", "--out", out])
        assert rc == 0
        ds = load_csv(out, label_column="label")
        means = np.vstack([ds.features[ds.labels == c].mean(axis=0) for c in range(3)])
        assert abs(np.linalg.norm(means[1] - means[2]) - 5.0) < 0.8
        assert abs(np.linalg.norm(means[0] - means[1]) - 10.0) < 0.8

    def test_bad_overlap_flag(self, tmp_path, capsys):
        rc = main(["gen", "--overlap", "1", "--out", str(tmp_path / "x.csv")])
        assert rc == 2


class TestRun:
    def test_minimal_kmeans_raw(self, tmp_path):
        cfg = write_config(tmp_path, """
[dataset]
name = mini
source = blobs
n_per_cluster = 20
d = 4
k = 3
sep = 10
noise = 0.5
seed = 0

[run]
methods = kmeans_raw
seeds = 0
""")
        out = str(tmp_path / "out")
        assert main(["run", "--config", cfg, "--out", out]) == 0
        lines = read_metrics(out).strip().splitlines()
        assert lines[0] == "method,dataset,seed,round,ari,nmi,silhouette,davies_bouldin"
        assert len(lines) == 2
        assert lines[1].startswith("kmeans_raw,mini,0,0,")
        fields = lines[1].split(",")
        assert all(f != "" for f in fields)  # labels present: all metrics filled

    def test_ipbc_emits_row_per_round(self, tmp_path):
        cfg = write_config(tmp_path, """
[dataset]
name = mini
source = blobs
n_per_cluster = 20
d = 4
k = 3
sep = 12
noise = 0.4
seed = 0

[run]
methods = ipbc
seeds = 0
""" + FAST_EMBED)
        out = str(tmp_path / "out")
        assert main(["run", "--config", cfg, "--out", out]) == 0
        lines = read_metrics(out).strip().splitlines()
        rounds = [line.split(",")[3] for line in lines[1:]]
        assert rounds == ["0", "1", "2"]
        assert os.path.exists(os.path.join(out, "coords_ipbc_seed0.csv"))
        assert os.path.exists(os.path.join(out, "session_ipbc_seed0.json"))

    def test_unknown_method_exit_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, """
[run]
methods = kmedoids
seeds = 0
""")
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "kmedoids" in capsys.readouterr().err

    def test_unknown_key_exit_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path, """
[run]
methods = static
seeds = 0

[embedding]
neighbours = 5
""")
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 2
        assert "neighbours" in capsys.readouterr().err

    def test_missing_dataset_exit_3(self, tmp_path, capsys):
        cfg = write_config(tmp_path, """
[dataset]
source = csv
path = /nonexistent/file.csv

[run]
methods = kmeans_raw
seeds = 0

[kmeans]
k = 2
""")
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 3

    def test_all_methods_deterministic_csv(self, tmp_path):
        cfg = write_config(tmp_path, """
[dataset]
name = blobs4
source = blobs
n_per_cluster = 25
d = 6
k = 3
sep = 12
noise = 0.5
seed = 2

[run]
methods = kmeans_raw, kmeans_pca, static, ipbc
seeds = 0,1
""" + FAST_EMBED)
        out_a = str(tmp_path / "a")
        out_b = str(tmp_path / "b")
        assert main(["run", "--config", cfg, "--out", out_a]) == 0
        assert main(["run", "--config", cfg, "--out", out_b]) == 0
        assert read_metrics(out_a) == read_metrics(out_b)
        rows = read_metrics(out_a).strip().splitlines()[1:]
        methods = {r.split(",")[0] for r in rows}
        assert methods == {"kmeans_raw", "kmeans_pca", "static", "ipbc"}

    def test_jobs_flag_matches_serial(self, tmp_path):
        cfg = write_config(tmp_path, """
[dataset]
name = blobs4
source = blobs
n_per_cluster = 20
d = 4
k = 2
sep = 10
noise = 0.5
seed = 2

[run]
methods = kmeans_raw, static
seeds = 0,1
""" + FAST_EMBED)
        out_a = str(tmp_path / "serial")
        out_b = str(tmp_path / "parallel")
        assert main(["run", "--config", cfg, "--out", out_a]) == 0
        assert main(["run", "--config", cfg, "--out", out_b, "--jobs", "4"]) == 0
        assert read_metrics(out_a) == read_metrics(out_b)


class TestCsvSource:
    def test_run_from_generated_csv(self, tmp_path):
        csv_path = str(tmp_path / "data.csv")
        assert main(["gen", "--n", "20", "--d", "4", "--k", "3", "--sep", "12",
                     "--noise", "0.4", "--seed", "5", "--out", csv_path]) == 0
        cfg = write_config(tmp_path, f"""
[dataset]
name = fromcsv
source = csv
path = {csv_path}
label_column = label

[run]
methods = static
seeds = 0
""" + FAST_EMBED)
        out = str(tmp_path / "out")
        assert main(["run", "--config", cfg, "--out", out]) == 0
        row = read_metrics(out).strip().splitlines()[1]
        fields = row.split(",")
        assert fields[0] == "static" and fields[1] == "fromcsv"
        assert fields[4] != ""  # external metrics present: labels were loaded

    def test_label_free_static_blanks_external_metrics(self, tmp_path):
        csv_path = str(tmp_path / "data.csv")
        assert main(["gen", "--n", "20", "--d", "4", "--k", "3", "--sep", "12",
                     "--noise", "0.4", "--seed", "5", "--out", csv_path]) == 0
        cfg = write_config(tmp_path, f"""
[dataset]
name = nolabels
source = csv
path = {csv_path}

[run]
methods = static, kmeans_raw
seeds = 0

[kmeans]
k = 3
""" + FAST_EMBED)
        out = str(tmp_path / "out")
        assert main(["run", "--config", cfg, "--out", out]) == 0
        for row in read_metrics(out).strip().splitlines()[1:]:
            fields = row.split(",")
            assert fields[4] == "" and fields[5] == ""   # ari, nmi blank
            assert fields[6] != ""                        # silhouette present
