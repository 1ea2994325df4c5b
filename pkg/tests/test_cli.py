import json
from pathlib import Path

import numpy as np
import pytest

from otfsim.channel import build_dd_matrix, channel_from_json
from otfsim.cli import main
from otfsim.harness import read_results_csv

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def small_sim_cfg(tmp_path, **kw):
    doc = dict(M=16, N=8, num_paths=4, k_max=3, l_max=9, fractional=True,
               detector="uamp", coded=False, snr_grid_db=[10.0], trials=4,
               min_bit_errors=0, master_seed=1)
    doc.update(kw)
    return write_cfg(tmp_path, doc)


def test_simulate_writes_results(tmp_path, capsys):
    out = tmp_path / "res.csv"
    rc = main(["simulate", "--config", small_sim_cfg(tmp_path), "--output", str(out)])
    assert rc == 0
    rows = read_results_csv(str(out))
    assert len(rows) == 1
    assert rows[0]["detector"] == "uamp"


def test_simulate_set_overrides(tmp_path):
    out = tmp_path / "res.csv"
    rc = main(["simulate", "--config", small_sim_cfg(tmp_path), "--output", str(out),
               "--set", "trials=2", "--set", "snr_grid_db=[6.0, 12.0]"])
    assert rc == 0
    rows = read_results_csv(str(out))
    assert len(rows) == 2
    assert int(rows[0]["trials"]) == 2


def test_missing_config_is_exit_1_with_path(tmp_path, capsys):
    rc = main(["simulate", "--config", str(tmp_path / "nope.json")])
    assert rc == 1
    assert "nope.json" in capsys.readouterr().err


def test_unknown_key_is_exit_1_named(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"M": 16, "N": 8, "bogus_key": 1})
    rc = main(["simulate", "--config", cfg, "--output", str(tmp_path / "o.csv")])
    assert rc == 1
    assert "bogus_key" in capsys.readouterr().err


def test_invalid_value_is_exit_1(tmp_path, capsys):
    cfg = small_sim_cfg(tmp_path, detector="uamp_rect")  # needs rectangular
    rc = main(["simulate", "--config", cfg, "--output", str(tmp_path / "o.csv")])
    assert rc == 1


def test_channel_dump_round_trip(tmp_path):
    cfg = write_cfg(tmp_path, {"M": 16, "N": 8, "num_paths": 4, "k_max": 3,
                               "l_max": 9, "fractional": True, "seed": 7})
    out = tmp_path / "chan.json"
    assert main(["channel-dump", "--config", cfg, "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1
    ch = channel_from_json(doc)
    H1 = build_dd_matrix(ch).to_dense()

    # re-emit a loaded channel: construction must be bit-identical
    cfg2 = write_cfg(tmp_path, {"channel": str(out)}, "reload.json")
    out2 = tmp_path / "chan2.json"
    assert main(["channel-dump", "--config", cfg2, "--output", str(out2)]) == 0
    ch2 = channel_from_json(json.loads(out2.read_text()))
    assert np.array_equal(build_dd_matrix(ch2).to_dense(), H1)


def test_simulate_accepts_fixed_channel(tmp_path):
    chan_cfg = write_cfg(tmp_path, {"M": 16, "N": 8, "num_paths": 3, "k_max": 3,
                                    "l_max": 9, "fractional": True, "seed": 3},
                         "chan_cfg.json")
    chan = tmp_path / "chan.json"
    assert main(["channel-dump", "--config", chan_cfg, "--output", str(chan)]) == 0
    out = tmp_path / "res.csv"
    rc = main(["simulate", "--config", small_sim_cfg(tmp_path),
               "--set", f'channel_file="{chan}"', "--output", str(out)])
    assert rc == 0
    assert len(read_results_csv(str(out))) == 1


def test_gtable_and_se_predict_pipeline(tmp_path):
    gcfg = write_cfg(tmp_path, {"constellation": "qpsk", "tau_min": 0.05,
                                "tau_max": 5.0, "tau_points": 8, "trials": 4,
                                "seed": 0, "n_symbols": 256}, "g.json")
    gout = tmp_path / "gtable.csv"
    assert main(["gtable", "--config", gcfg, "--output", str(gout)]) == 0
    assert gout.read_text().startswith("# schema=1")

    chan_cfg = write_cfg(tmp_path, {"M": 16, "N": 8, "num_paths": 4, "k_max": 3,
                                    "l_max": 9, "fractional": True, "seed": 2},
                         "chan_cfg.json")
    chan = tmp_path / "chan.json"
    assert main(["channel-dump", "--config", chan_cfg, "--output", str(chan)]) == 0

    scfg = write_cfg(tmp_path, {"gtable": str(gout), "channel": str(chan),
                                "waveform": "rectangular", "snr_db": [8.0],
                                "iters": 6}, "se.json")
    sout = tmp_path / "se.csv"
    assert main(["se-predict", "--config", scfg, "--output", str(sout)]) == 0
    lines = [l for l in sout.read_text().splitlines() if l and not l.startswith("#")]
    assert lines[0] == "snr_db,iter,tau,ber_pred,v_x"
    assert len(lines) == 7


def test_se_predict_out_of_range_tau_warns_but_completes(tmp_path, capsys):
    # a table whose range excludes the operating tau exercises the clamp
    gout = tmp_path / "tiny_gtable.csv"
    gout.write_text("# schema=1\ntau,ber,v_x,trials,errors\n"
                    "0.001,0.0,0.0,10,0\n0.002,1e-05,0.001,10,3\n")
    chan_cfg = write_cfg(tmp_path, {"M": 16, "N": 8, "num_paths": 4, "k_max": 3,
                                    "l_max": 9, "fractional": True, "seed": 2},
                         "chan_cfg.json")
    chan = tmp_path / "chan.json"
    assert main(["channel-dump", "--config", chan_cfg, "--output", str(chan)]) == 0
    scfg = write_cfg(tmp_path, {"gtable": str(gout), "channel": str(chan),
                                "waveform": "biorthogonal", "snr_db": 8.0,
                                "iters": 3}, "se.json")
    sout = tmp_path / "se.csv"
    with pytest.warns(UserWarning, match="clamping"):
        rc = main(["se-predict", "--config", scfg, "--output", str(sout)])
    assert rc == 0


def test_trace_detector_and_turbo(tmp_path):
    out = tmp_path / "trace.csv"
    rc = main(["trace", "--config", small_sim_cfg(tmp_path), "--output", str(out)])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "trial,iter,eps_hat,mean_nu_x,ser_vs_truth"
    assert len(lines) == 16

    out2 = tmp_path / "trace2.csv"
    rc = main(["trace", "--config", small_sim_cfg(tmp_path, coded=True),
               "--output", str(out2)])
    assert rc == 0
    lines = [l for l in out2.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "iter,ber_info,ber_coded,eps_hat"


def test_bad_set_syntax_is_exit_1(tmp_path, capsys):
    rc = main(["simulate", "--config", small_sim_cfg(tmp_path), "--set", "oops"])
    assert rc == 1


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("*.json")))
def test_shipped_configs_parse(name):
    doc = json.loads((CONFIG_DIR / name).read_text())
    assert isinstance(doc, dict)
    if "detector" in doc:
        from otfsim.harness import ExperimentConfig
        ExperimentConfig.from_dict(doc)  # must validate cleanly


def test_shipped_desk_configs_run_end_to_end(tmp_path):
    # every desk-scale config must run; tiny trial overrides keep this a
    # smoke test (full desk runs stay under the 5-minute contract, which
    # the acceptance suite exercises at its real sizes)
    import time

    t0 = time.time()
    chan = tmp_path / "chan.json"
    assert main(["channel-dump", "--config", str(CONFIG_DIR / "channel_desk.json"),
                 "--output", str(chan)]) == 0
    gtab = tmp_path / "g.csv"
    assert main(["gtable", "--config", str(CONFIG_DIR / "gtable_qpsk.json"),
                 "--output", str(gtab), "--set", "trials=3", "--set", "tau_points=8"]) == 0
    assert main(["se-predict", "--config", str(CONFIG_DIR / "se_predict_desk.json"),
                 "--output", str(tmp_path / "se.csv"),
                 "--set", f'gtable="{gtab}"', "--set", f'channel="{chan}"']) == 0
    for name in sorted(CONFIG_DIR.glob("*desk.json")):
        doc = json.loads(name.read_text())
        if "detector" not in doc:
            continue
        out = tmp_path / (name.stem + ".out")
        if "trace" in name.stem:
            assert main(["trace", "--config", str(name), "--output", str(out)]) == 0
        else:
            assert main(["simulate", "--config", str(name), "--output", str(out),
                         "--set", "trials=2", "--set", "min_bit_errors=0"]) == 0
    assert time.time() - t0 < 300
