import json

import numpy as np
import pytest

from nlvar.cli import main
from nlvar.core import Role, TimeSeriesPanel
from nlvar.files import load_model, read_panel, write_panel
from nlvar.forward import per_node_mse
from nlvar.topology import read_edges


@pytest.fixture
def small(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("n_nodes = 3\norder = 1\nn_units = 3\nt_total = 150\nseed = 4\n")
    assert main(["generate", "--config", str(cfg), "--out-prefix", str(tmp_path / "d")]) == 0
    return tmp_path


def test_generate_defaults(tmp_path):
    assert main(["generate", "--out-prefix", str(tmp_path / "x")]) == 0
    panel = read_panel(tmp_path / "x_observed.csv")
    assert panel.data.shape == (1000, 10)
    manifest = json.loads((tmp_path / "x_manifest.json").read_text())
    assert manifest["config"]["seed"] == 0 and manifest["config"]["order"] == 2
    assert load_model(tmp_path / "x_model.json").shape.n_nodes == 10


def test_generate_is_deterministic(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("t_total = 5\n")
    for prefix in ("a", "b"):
        assert main(["generate", "--config", str(cfg), "--out-prefix", str(tmp_path / prefix)]) == 0
    a = (tmp_path / "a_observed.csv").read_text()
    assert a == (tmp_path / "b_observed.csv").read_text()
    assert len(a.splitlines()) == 6


def test_bad_config_exits_1(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("t_total = 5\nwhat = 1\n")
    assert main(["generate", "--config", str(cfg), "--out-prefix", str(tmp_path / "a")]) == 1
    assert ":2" in capsys.readouterr().err


def test_fit_eval_and_report(small, capsys):
    cfg = small / "fit.cfg"
    cfg.write_text("order = 1\nn_units = 3\nepochs = 4\nlearning_rate = 0.01\n")
    args = ["fit", str(small / "d_observed.csv"), "--config", str(cfg),
            "--model-out", str(small / "m.json"), "--report-out", str(small / "r.csv")]
    assert main(args) == 0
    lines = (small / "r.csv").read_text().splitlines()
    assert lines[0] == "epoch,train_mse,test_mse" and len(lines) == 5
    assert main(["eval", str(small / "m.json"), str(small / "d_observed.csv")]) == 0
    out = capsys.readouterr().out.splitlines()
    model = load_model(small / "m.json")
    per_node = per_node_mse(model, read_panel(small / "d_observed.csv"))
    assert out[0] == f"mse {float(per_node.mean())!r}"
    assert out[1:] == [f"node_{i} {float(v)!r}" for i, v in enumerate(per_node)]


def test_fit_zero_epochs_writes_header_only(small):
    cfg = small / "fit.cfg"
    cfg.write_text("order = 1\nepochs = 0\n")
    assert main(["fit", str(small / "d_observed.csv"), "--config", str(cfg),
                 "--model-out", str(small / "m.json"), "--report-out", str(small / "r.csv")]) == 0
    assert (small / "r.csv").read_text() == "epoch,train_mse,test_mse\n"


def test_fit_on_noiseless_data_reaches_small_error(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("n_nodes = 2\norder = 1\nn_units = 3\nt_total = 300\nnoise_std = 0.0\n")
    main(["generate", "--config", str(cfg), "--out-prefix", str(tmp_path / "d")])
    # zero innovations give a constant panel; any model with f(ŷ) at the constant fits it
    fit_cfg = tmp_path / "fit.cfg"
    fit_cfg.write_text("order = 1\nn_units = 3\nepochs = 20\nlearning_rate = 0.01\n")
    assert main(["fit", str(tmp_path / "d_observed.csv"), "--config", str(fit_cfg),
                 "--model-out", str(tmp_path / "m.json"), "--report-out", str(tmp_path / "r.csv")]) == 0
    last = (tmp_path / "r.csv").read_text().splitlines()[-1].split(",")
    assert float(last[1]) < 1e-4


def test_fit_failure_removes_partial_outputs(tmp_path, capsys):
    data = tmp_path / "flat.csv"
    write_panel(data, TimeSeriesPanel(np.zeros((20, 2)), Role.OBSERVED))
    cfg = tmp_path / "fit.cfg"
    cfg.write_text("order = 1\nlearning_rate = -1\n")
    rc = main(["fit", str(data), "--config", str(cfg), "--model-out", str(tmp_path / "m.json"),
               "--report-out", str(tmp_path / "r.csv")])
    assert rc == 1
    assert not (tmp_path / "m.json").exists() and not (tmp_path / "r.csv").exists()


def test_missing_input_exits_1(tmp_path):
    assert main(["eval", str(tmp_path / "none.json"), str(tmp_path / "none.csv")]) == 1


def test_fit_linear_and_eval(small, capsys):
    assert main(["fit-linear", str(small / "d_observed.csv"), "--order", "1",
                 "--model-out", str(small / "l.json")]) == 0
    doc = json.loads((small / "l.json").read_text())
    assert doc["linear_identity_maps"] is True
    assert main(["eval", str(small / "l.json"), str(small / "d_observed.csv")]) == 0
    assert capsys.readouterr().out.startswith("mse ")


def test_fit_linear_rank_deficient_exits_2(tmp_path):
    data = tmp_path / "zeros.csv"
    write_panel(data, TimeSeriesPanel(np.zeros((20, 2)), Role.OBSERVED))
    assert main(["fit-linear", str(data), "--order", "1", "--ridge", "0",
                 "--model-out", str(tmp_path / "l.json")]) == 2
    assert not (tmp_path / "l.json").exists()


def test_topology_threshold_sweep_is_nested(small):
    sets = []
    for t in (0.0, 0.05, 0.2, 0.5, 10.0):
        out = small / f"e{t}.csv"
        assert main(["topology", str(small / "d_model.json"), "--threshold", str(t),
                     "--edges-out", str(out)]) == 0
        sets.append(read_edges(out, 3).pairs())
    assert all(b <= a for a, b in zip(sets, sets[1:]))
    assert sets[-1] == set()


def test_gradcheck_passes_and_corruption_fails(capsys):
    assert main(["gradcheck", "--instances", "3"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok") == 5
    assert main(["gradcheck", "--instances", "2", "--corrupt", "1e-3"]) != 0
    assert "FAIL" in capsys.readouterr().out
