import json
import math
import os

import numpy as np
import pytest

from qsl_tls.io import format_value, read_config, render_csv, render_json, write_text_atomic
from qsl_tls.protocols import ProtocolKind
from qsl_tls.sweep import (
    SWEEP_COLUMNS,
    SweepConfig,
    evaluate_point,
    run_sweep,
    sign_changes,
    success_fraction,
)


def test_documented_columns_come_first():
    assert SWEEP_COLUMNS[:13] == (
        "gamma", "theta", "s", "T", "T_A_closed", "T_A_traj", "T_B_closed",
        "T_B_traj", "T_C_closed", "T_m", "T_piecewise", "fidelity", "s_path",
    )


def test_config_defaults_and_validation():
    cfg = SweepConfig()
    assert cfg.effective_lambda0 == 10.0
    assert cfg.effective_c_factor is None
    assert SweepConfig(protocol="bang_bang").effective_c_factor == 0.5
    assert SweepConfig(protocol="bang_off_bang").effective_c_factor == 1.5
    for bad in (
        dict(omega=0.0),
        dict(gamma_min=5.0, gamma_max=1.0),
        dict(gamma_steps=1),
        dict(log_gamma=True),
        dict(step=0.0),
        dict(format="xml"),
    ):
        with pytest.raises(ValueError):
            SweepConfig(**bad).validate()


def test_grids():
    assert np.allclose(SweepConfig(gamma_steps=3).grid(), [0, 5, 10])
    g = SweepConfig(gamma_min=0.01, gamma_max=100, gamma_steps=5, log_gamma=True).grid()
    assert np.allclose(g, [0.01, 0.1, 1, 10, 100])


def test_sweep_rows_are_ordered_and_complete():
    rows = run_sweep(SweepConfig(gamma_max=4.0, gamma_steps=5))
    assert [r["gamma"] for r in rows] == [0, 1, 2, 3, 4]
    assert success_fraction(rows) == 1.0
    for r in rows:
        assert set(r) == set(SWEEP_COLUMNS)
        assert r["T"] == pytest.approx(math.atan(r["gamma"]), abs=1e-12)


@pytest.mark.parametrize("protocol", ["bang_bang", "bang_off_bang"])
def test_constrained_sweeps_have_empty_closed_columns(protocol):
    rows = run_sweep(SweepConfig(protocol=protocol, gamma_min=0.5, gamma_max=3.0, gamma_steps=3))
    assert all(r["status"] == "ok" and r["T_A_closed"] is None for r in rows)
    assert all(r["fidelity"] >= 1 - 1e-9 for r in rows)


def test_failed_point_becomes_error_row(monkeypatch):
    import qsl_tls.sweep as sweep
    from qsl_tls.errors import UnreachableTargetError

    def boom(*a, **k):
        raise UnreachableTargetError("target unreachable with given structure")

    monkeypatch.setattr(sweep, "evaluate", boom)
    row, report = evaluate_point(SweepConfig(), 1.0)
    assert report is None
    assert row["status"].startswith("error: UnreachableTargetError")
    assert success_fraction([row]) == 0.0


def test_sign_changes():
    assert sign_changes([1, 0, 2, -1, -3, 0, 4]) == 2
    assert sign_changes([]) == 0


def test_format_value():
    assert format_value(None) == ""
    assert format_value(True) == "true"
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(2) == "2"
    assert format_value("ok") == "ok"


def test_render_csv_and_json():
    text = render_csv(("a", "b"), [{"a": 1.0, "b": None}])
    assert text == "a,b\n1,\n"
    payload = json.loads(render_json({"x": [1 / 3, "s"], "y": None}))
    assert payload == {"x": [0.333333333333, "s"], "y": None}


def test_sweep_csv_is_deterministic():
    cfg = SweepConfig(gamma_max=2.0, gamma_steps=3)
    assert render_csv(SWEEP_COLUMNS, run_sweep(cfg)) == render_csv(SWEEP_COLUMNS, run_sweep(cfg))


def test_atomic_write_replaces_target(tmp_path):
    target = tmp_path / "out.csv"
    target.write_text("old")
    write_text_atomic(str(target), "new\n")
    assert target.read_text() == "new\n"
    assert os.listdir(tmp_path) == ["out.csv"]


def test_atomic_write_leaves_nothing_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"
    target.write_text("old")

    def fail(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", fail)
    with pytest.raises(OSError):
        write_text_atomic(str(target), "new\n")
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["out.csv"]


def test_atomic_write_missing_directory(tmp_path):
    with pytest.raises(OSError):
        write_text_atomic(str(tmp_path / "nope" / "out.csv"), "x")


def test_read_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nomega = 2\ngamma-steps = 7  # trailing\n\nprotocol=bang_bang\n")
    assert read_config(str(path)) == {"omega": "2", "gamma_steps": "7", "protocol": "bang_bang"}
    path.write_text("omega 2\n")
    with pytest.raises(ValueError, match="key = value"):
        read_config(str(path))


def test_protocol_parse_in_config():
    assert SweepConfig(protocol="composite_unconstrained").protocol is ProtocolKind.COMPOSITE
