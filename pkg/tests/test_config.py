"""Subject-config parsing and validation."""

import json
import math

import numpy as np
import pytest

from armplan.config import SubjectConfig, load_subject_config, parse_subject_config
from armplan.errors import ConfigError
from armplan.rhythm import PrInput


def test_defaults():
    cfg = SubjectConfig()
    assert cfg.geom.l_u == 0.30 and cfg.geom.l_f == 0.33
    assert cfg.links.upper.mass == 2.0 and cfg.links.forearm.com_ratio == 0.530
    assert cfg.rhythm.d0 == 0.18
    assert cfg.solver.n_steps == 200 and cfg.solver.tol_endpoint == 1e-9
    assert cfg.planner.alpha_grid_step == pytest.approx(math.radians(5.0))
    assert cfg.dynamics.couple_shoulder is False


def test_full_document_roundtrip(tmp_path):
    doc = {
        "arm": {"l_u": 0.28, "l_f": 0.31,
                "limits_deg": {"theta": [0, 170], "phi": [0, 140]}},
        "links": {"upper": {"mass": 2.3, "com_ratio": 0.45},
                  "forearm": {"mass": 1.5, "com_ratio": 0.5, "inertia": [0.01, 0.01, 0.002]}},
        "rhythm": {"d0": 0.17, "origin": [0.01, 0.0, 0.02], "pr_input": "degrees"},
        "solver": {"n_steps": 128, "tol_endpoint": 1e-8, "max_newton": 30},
        "planner": {"alpha_grid_step_deg": 10.0, "alpha_refine_tol_deg": 0.5,
                    "duration_s": 3.0, "n_samples": 120},
        "dynamics": {"couple_shoulder": True, "regularization": 1e-8},
    }
    path = tmp_path / "subject.json"
    path.write_text(json.dumps(doc))
    cfg = load_subject_config(path)
    assert cfg.geom.l_u == 0.28
    np.testing.assert_allclose(cfg.geom.limits[0], np.radians([0, 170]))
    np.testing.assert_allclose(cfg.geom.limits[1], np.radians([-45, 135]))   # default kept
    assert cfg.links.forearm.inertia[2] == 0.002
    # rod default inertia derived from the overridden length/mass
    assert cfg.links.upper.inertia[0] == pytest.approx(2.3 * 0.28**2 / 12)
    assert cfg.rhythm.pr_input is PrInput.DEGREES
    assert cfg.solver.n_steps == 128
    assert cfg.planner.duration == 3.0
    assert cfg.dynamics.couple_shoulder is True


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_subject_config({"arms": {}})
    with pytest.raises(ConfigError, match="rhythm"):
        parse_subject_config({"rhythm": {"dsg": 1}})


def test_invalid_values_carry_paths():
    with pytest.raises(ConfigError, match="arm.l_u"):
        parse_subject_config({"arm": {"l_u": -0.1}})
    with pytest.raises(ConfigError, match="rhythm"):
        parse_subject_config({"rhythm": {"coeffs_dsg": [0.0, 0.0, 0.5]}})
    with pytest.raises(ConfigError, match="solver.n_steps"):
        parse_subject_config({"solver": {"n_steps": 4}})
    with pytest.raises(ConfigError, match="alpha_grid_step"):
        parse_subject_config({"planner": {"alpha_grid_step_deg": 0.05}})


def test_parse_error_line_numbers(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "arm": {\n    "l_u": oops\n  }\n}\n')
    with pytest.raises(ConfigError, match=r"broken\.json:3:"):
        load_subject_config(path)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_subject_config(tmp_path / "nope.json")
