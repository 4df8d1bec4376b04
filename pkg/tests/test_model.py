import math

import numpy as np
import pytest

from borearm.kinematics import FIXED, PRISMATIC, REVOLUTE
from borearm.model import ModelFormatError, default_model, load_model

HALF_PI = math.pi / 2


def test_dh_table_matches_published_constants(model):
    rows = model.dh.rows
    assert len(rows) == 8
    types = [r.joint_type for r in rows]
    assert types == [PRISMATIC, PRISMATIC, REVOLUTE, REVOLUTE, REVOLUTE,
                     REVOLUTE, PRISMATIC, FIXED]
    expected = [
        (0.0, HALF_PI, 0.0, 0.0),
        (0.0, -HALF_PI, 0.0, 0.0),
        (0.0, 0.0, 0.0, 0.0),
        (0.0, HALF_PI, 0.0, HALF_PI),
        (8e-2, HALF_PI, 0.0, 0.0),
        (8e-2, HALF_PI, 0.0, -HALF_PI),
        (5.57e-2, -HALF_PI, 2.74e-2, 0.0),
        (0.0, 0.0, 1.15e-1, HALF_PI),
    ]
    for row, (a, alpha, d, theta) in zip(rows, expected):
        assert row.a == a
        assert row.alpha == alpha
        assert row.d_offset == d
        assert row.theta_offset == theta


def test_joint_limits_defaults(model):
    np.testing.assert_array_equal(model.limits.lower,
                                  [0.0, 0.0, -math.pi, -HALF_PI, -2.2, -2.2, 0.0])
    np.testing.assert_array_equal(model.limits.upper,
                                  [0.3, 0.3, math.pi, HALF_PI, 2.2, 2.2, 0.12])


def test_encoder_and_cable_defaults(model):
    assert model.encoder.counts_per_motor_rev == 2000
    assert model.encoder.gear_ratio == 479
    assert model.cable_drive.material.name == "SK99"


def test_body_links(model):
    names = [link.name for link in model.body]
    assert names == ["tube", "link4", "link5", "link6", "carriage", "needle"]
    assert all(1 <= link.frame <= 8 for link in model.body)
    assert sum(link.in_bore for link in model.body) == 3


def test_load_from_explicit_path_matches_default(tmp_path):
    from importlib import resources
    text = resources.files("borearm.data").joinpath("robot.yaml").read_text()
    path = tmp_path / "robot.yaml"
    path.write_text(text)
    loaded = load_model(path)
    default = default_model()
    for a, b in zip(loaded.dh.rows, default.dh.rows):
        assert a == b
    np.testing.assert_array_equal(loaded.mixing.M, default.mixing.M)
    np.testing.assert_array_equal(loaded.limits.lower, default.limits.lower)


def test_missing_file_raises():
    with pytest.raises(ModelFormatError):
        load_model("/nonexistent/robot.yaml")


def test_bad_yaml_raises(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("dh: [unclosed")
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_missing_key_raises(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("name: x\n")
    with pytest.raises(ModelFormatError, match="dh"):
        load_model(path)


def test_non_triangular_mixing_raises(tmp_path):
    from importlib import resources
    text = resources.files("borearm.data").joinpath("robot.yaml").read_text()
    text = text.replace("- [0.00573, 0.0,     0.0,  0.0,      0.0,     0.0,      0.0]",
                        "- [0.00573, 1.0,     0.0,  0.0,      0.0,     0.0,      0.0]", 1)
    path = tmp_path / "robot.yaml"
    path.write_text(text)
    with pytest.raises((ModelFormatError, Exception)):
        load_model(path)


def test_wrong_limit_count_raises(tmp_path):
    from importlib import resources
    text = resources.files("borearm.data").joinpath("robot.yaml").read_text()
    text = text.replace("lower: [0.0, 0.0, -3.141592653589793, -1.5707963267948966, -2.2, -2.2, 0.0]",
                        "lower: [0.0, 0.0]")
    path = tmp_path / "robot.yaml"
    path.write_text(text)
    with pytest.raises(ModelFormatError):
        load_model(path)
