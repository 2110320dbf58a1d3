import json
import os
import subprocess
import sys

import numpy as np
import pytest

from nsdlab.cli import main, run_header
from nsdlab.presets import GROUPS, config_from_json, preset, preset_names

TINY = {
    "instance": {
        "K": 2, "S": 2, "T": 300,
        "theta": [0.9, 0.1],
        "segments": [{"start": 1, "P": [[0.7, 0.3], [0.3, 0.7]]}],
        "delay": {"constant": 10},
    },
    "policies": ["nsd-ucrl2", {"name": "sw-ucb", "W": 50}],
    "reps": 2,
    "change_rounds": [150],
}


def test_preset_fig2():
    cfg = preset("fig2")
    inst = cfg.instance
    assert (inst.num_actions, inst.num_signals, inst.horizon) == (4, 3, 8000)
    assert inst.delay_model.delay == 0
    assert cfg.change_rounds == (2000, 4000, 6000)
    assert [p.key for p in cfg.policies] == ["nsd-ucrl2-W400", "nsd-ucrl2-W800", "nsd-ucrl2-W2000", "oracle-nsd-nd"]
    assert cfg.reps == 50 and cfg.delta == 0.05


def test_preset_fig3_d1000():
    cfg = preset("fig3-d1000")
    assert cfg.instance.delay_model.delay == 1000
    assert len(cfg.policies) == 8 and cfg.log_y
    assert not preset("figA-d1000").log_y
    np.testing.assert_allclose(cfg.instance.theta, [0.8, 0.4, 0.2])


def test_mixture_presets():
    fav, bad = preset("fig4-favorable"), preset("fig5-bad")
    assert fav.instance.num_actions == 2 and fav.instance.alpha == 0.1
    assert bad.instance.alpha == 0.3
    np.testing.assert_allclose(bad.instance.mixture.mu[0], [0.1, 0.9])
    assert preset("fig6-a0.5").instance.alpha == 0.5


def test_every_preset_builds():
    for name in preset_names():
        if name not in GROUPS:
            preset(name)


def test_unknown_preset_exit_code(capsys):
    assert main(["--preset", "fig99", "--out", "x"]) == 2
    err = capsys.readouterr().err
    assert "fig2" in err and "fig3-d100" in err


def test_missing_source_is_usage_error():
    assert main([]) == 2


def test_bad_reps():
    assert main(["--preset", "fig2", "--reps", "0"]) == 2


def test_bad_config_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"K": 2}')
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == 1


def _run_config(tmp_path, out, *extra):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(TINY))
    return main(["--config", str(cfg), "--out", str(out), *extra])


def test_config_run_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    assert _run_config(tmp_path, out, "--plot") == 0
    rows = (out / "results.csv").read_text().splitlines()
    assert rows[0] == "policy,round,mean_cum_regret,ci_low,ci_high"
    assert len(rows) == 1 + 2 * 300
    assert rows[-1].startswith("sw-ucb-W50,300,")
    first = rows[300].split(",")
    assert first[:2] == ["nsd-ucrl2", "300"]
    assert float(first[2]) - float(first[3]) > 0  # two reps give a non-zero CI
    svg = (out / "plot.svg").read_text()
    assert svg.startswith("<svg") and "sw-ucb-W50" in svg and "<polyline" in svg
    header = (out / "run-header.txt").read_text()
    assert "delta=0.05" in header and "reps=2" in header
    assert "final_mean" in capsys.readouterr().out


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run_config(tmp_path, a) == 0
    assert _run_config(tmp_path, b) == 0
    for name in ("results.csv", "replications.csv", "run-header.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seed_override_changes_results(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    _run_config(tmp_path, a)
    _run_config(tmp_path, b, "--seed", "7")
    assert (a / "results.csv").read_bytes() != (b / "results.csv").read_bytes()


def test_trajectory_dump(tmp_path):
    out = tmp_path / "o"
    assert _run_config(tmp_path, out, "--dump-trajectories", "--reps", "1") == 0
    names = sorted(p.name for p in (out / "trajectories").iterdir())
    assert names == ["instance-rep0.json", "trajectory-nsd-ucrl2-rep0.csv", "trajectory-sw-ucb-W50-rep0.csv"]


@pytest.mark.skipif(hasattr(os, "geteuid") and os.geteuid() == 0, reason="root ignores permissions")
def test_unwritable_output_dir_permissions(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    ro.chmod(0o500)
    try:
        assert _run_config(tmp_path, ro / "sub") == 1
    finally:
        ro.chmod(0o700)


def test_unwritable_output_path(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    assert _run_config(tmp_path, blocker / "sub") == 1
    assert str(blocker) in capsys.readouterr().err


def test_header_lists_parameters():
    cfg = config_from_json(TINY, "tiny")
    h = run_header(cfg)
    for piece in ("K=2 S=2 T=300 D=10", "delta=0.05", "seed=0", "change_rounds=[150]", "sw-ucb-W50(W=50"):
        assert piece in h


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(dict(TINY, reps=1)))
    proc = subprocess.run([sys.executable, "-m", "nsdlab.cli", "--config", str(cfg), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "results.csv").exists()
