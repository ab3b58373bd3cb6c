"""Experiment runner, CSV I/O, and the file-based selection pipeline."""

import numpy as np
import pytest

from groupknock.config import build_experiment_config
from groupknock.errors import DegenerateInput, ParseError
from groupknock.knockoffs import GroupPartition
from groupknock.network import TrainConfig
from groupknock.runner import (
    read_group_map,
    read_matrix_csv,
    read_response_csv,
    run_experiment,
    run_selection,
    select_from_arrays,
    write_matrix_csv,
)
from groupknock.simulate import SimDesign, gen_dataset

SMALL = {
    "n": "120",
    "groups": "4",
    "group_size": "5",
    "k": "2",
    "replications": "3",
    "epochs": "25",
    "seed": "5",
}


def small_config(tmp_path, name, **extra):
    overrides = dict(SMALL)
    overrides.update(extra)
    overrides["out"] = str(tmp_path / name)
    return build_experiment_config(overrides=overrides)


class TestRunExperiment:
    def test_rerun_is_byte_identical(self, tmp_path):
        cfg1 = small_config(tmp_path, "a.csv")
        cfg2 = small_config(tmp_path, "b.csv")
        run_experiment(cfg1)
        run_experiment(cfg2)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        serial = small_config(tmp_path, "serial.csv", method="group_lcd")
        parallel = small_config(tmp_path, "parallel.csv", method="group_lcd", workers="3")
        run_experiment(serial)
        run_experiment(parallel)
        assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "parallel.csv").read_bytes()

    def test_rows_sorted_and_complete(self, tmp_path):
        cfg = small_config(tmp_path, "c.csv", method="group_lcd")
        rows, summary = run_experiment(cfg)
        assert [r.replicate_id for r in rows] == [0, 1, 2]
        assert summary["failed"] == 0
        assert 0.0 <= summary["gfdr"] <= 1.0
        text = (tmp_path / "c.csv").read_text().splitlines()
        assert text[0] == "replicate,seed,method,n_selected,fdp,tpr,tau"
        assert text[-1].startswith("aggregate,")

    def test_failures_recorded_not_raised(self, tmp_path):
        cfg = small_config(tmp_path, "fail.csv")
        bad = build_experiment_config(
            overrides={**SMALL, "learning_rate": "1e300", "out": str(tmp_path / "fail.csv")}
        )
        with np.errstate(over="ignore", invalid="ignore"):
            rows, summary = run_experiment(bad)
        assert summary["failed"] == 3
        assert all(r.error == "NumericalDivergence" for r in rows)
        assert "gfdr" not in summary
        body = (tmp_path / "fail.csv").read_text().splitlines()
        assert body[1].startswith("0,5,gknock,error:NumericalDivergence")

    def test_global_null_reports_vacuous_power(self, tmp_path):
        cfg = small_config(tmp_path, "null.csv", k="0", method="group_lcd")
        _, summary = run_experiment(cfg)
        assert summary["power"] == 1.0


class TestMatrixCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((7, 3)) * 1e3
        path = tmp_path / "x.csv"
        write_matrix_csv(str(path), ["a", "b", "c"], x)
        names, back = read_matrix_csv(str(path))
        assert names == ["a", "b", "c"]
        np.testing.assert_array_equal(back, x)

    def test_numeric_header_rejected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        with pytest.raises(ParseError, match="header"):
            read_matrix_csv(str(path))

    def test_ragged_row_reports_line(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1.0,2.0\n3.0\n")
        with pytest.raises(ParseError, match=":3:"):
            read_matrix_csv(str(path))

    def test_missing_value_is_hard_error(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1.0,\n")
        with pytest.raises(ParseError, match="missing value"):
            read_matrix_csv(str(path))

    def test_non_numeric_cell_reports_location(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1.0,oops\n")
        with pytest.raises(ParseError, match=":2:"):
            read_matrix_csv(str(path))

    def test_response_must_be_single_column(self, tmp_path):
        path = tmp_path / "y.csv"
        path.write_text("y,z\n1.0,2.0\n")
        with pytest.raises(ParseError, match="single"):
            read_response_csv(str(path))


class TestGroupMap:
    def test_valid_map(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("feature,group\nf1,g1\nf2,g2\nf3,g1\n")
        partition, labels = read_group_map(str(path), ["f1", "f2", "f3"])
        assert labels == ["g1", "g2"]
        np.testing.assert_array_equal(partition.groups[0], [0, 2])

    def test_missing_feature(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("feature,group\nf1,g1\n")
        with pytest.raises(ParseError, match="no group for feature 'f2'"):
            read_group_map(str(path), ["f1", "f2"])

    def test_unknown_feature(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("feature,group\nf1,g1\nf9,g1\n")
        with pytest.raises(ParseError, match="unknown feature"):
            read_group_map(str(path), ["f1"])

    def test_duplicate_feature(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("feature,group\nf1,g1\nf1,g2\n")
        with pytest.raises(ParseError, match="twice"):
            read_group_map(str(path), ["f1"])


def simulated_files(tmp_path, seed=9):
    design = SimDesign(n=150, p=20, m=4, group_size=5, k=2, amplitude=1.5, seed=seed)
    data = gen_dataset(design)
    names = [f"feat{i:02d}" for i in range(design.p)]
    x_path, y_path, g_path = (tmp_path / n for n in ("x.csv", "y.csv", "groups.csv"))
    write_matrix_csv(str(x_path), names, data.x)
    write_matrix_csv(str(y_path), ["response"], data.y[:, None])
    rows = "\n".join(f"{name},grp{i // 5}" for i, name in enumerate(names))
    g_path.write_text("feature,group\n" + rows + "\n")
    return design, data, names, str(x_path), str(y_path), str(g_path)


class TestRunSelection:
    def test_csv_path_matches_in_memory_path(self, tmp_path):
        design, data, names, x_path, y_path, g_path = simulated_files(tmp_path)
        sel_file, labels = run_selection(
            x_path, y_path, g_path, q=0.3, method="group_lcd", seed=4,
            output_path=str(tmp_path / "report.csv"),
        )
        partition = GroupPartition.from_labels([f"grp{i // 5}" for i in range(20)])
        sel_mem = select_from_arrays(
            data.x, data.y, partition, q=0.3, method="group_lcd", seed=4,
            ridge=1e-3, train_cfg=TrainConfig(),
        )
        assert sel_file.selected == sel_mem.selected
        assert sel_file.tau == sel_mem.tau
        np.testing.assert_array_equal(sel_file.w, sel_mem.w)
        assert labels == ["grp0", "grp1", "grp2", "grp3"]

    def test_report_is_deterministic(self, tmp_path):
        _, _, _, x_path, y_path, g_path = simulated_files(tmp_path)
        for name in ("r1.csv", "r2.csv"):
            run_selection(
                x_path, y_path, g_path, q=0.3, method="group_lcd", seed=4,
                output_path=str(tmp_path / name),
            )
        assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()
        header = (tmp_path / "r1.csv").read_text().splitlines()[0]
        assert header == "group,w_stat,selected"

    def test_constant_column_rejected(self, tmp_path):
        _, _, names, x_path, y_path, g_path = simulated_files(tmp_path)
        names_x, x = read_matrix_csv(x_path)
        x[:, 3] = 7.0
        write_matrix_csv(x_path, names_x, x)
        with pytest.raises(DegenerateInput, match="feat03"):
            run_selection(x_path, y_path, g_path, q=0.2, method="group_lcd")

    def test_row_count_mismatch(self, tmp_path):
        _, data, names, x_path, y_path, g_path = simulated_files(tmp_path)
        write_matrix_csv(y_path, ["response"], data.y[:-3, None])
        with pytest.raises(ParseError, match="rows"):
            run_selection(x_path, y_path, g_path, q=0.2, method="group_lcd")
