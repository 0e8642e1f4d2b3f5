import math
import os
from pathlib import Path

import numpy as np
import pytest

import robcal

DATA = Path(os.environ.get("ROBCAL_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_one_link_kinematics():
    m = robcal.Model.from_text("joint a=0 alpha=0 d=0 theta=0\ntool x=1\n")
    pos, rot = m.forward_kinematics(np.array([math.pi / 2]))
    assert np.allclose(pos, [0, 1, 0], atol=1e-12)
    assert np.allclose(rot @ rot.T, np.eye(3))
    assert np.allclose(m.joint_jacobian(np.zeros(1))[:3, 0], [0, 1, 0])


def test_study_model_file_matches_builtin():
    q = np.radians([79.2, -0.01, -5.57, 51, -97.52, -91.67])
    a, _ = robcal.Model.from_file(str(DATA / "study.model")).forward_kinematics(q, 2)
    b, _ = robcal.Model.study().forward_kinematics(q, 2)
    assert np.array_equal(a, b)


def test_scalar_closed_forms():
    s = robcal.System(np.ones((3, 1)), np.array([1.0, 2.0, 1.5]), np.array([1.0, 2.0, 1.0]))
    assert robcal.ols(s).x_hat[0] == pytest.approx(1.5)
    r = robcal.wls(s, robcal.optimal_weights(s.sigma))
    assert r.covariance[0, 0] == pytest.approx(1 / (1 + 0.25 + 1))
    assert robcal.robust_weights(np.array([150e-6]))[0] == pytest.approx(0.0625)


def test_noise_free_study_recovery():
    sys, truth = robcal.study_system(noise=False)
    assert (sys.rows, sys.cols) == (810, 9)
    x = robcal.ols(sys).x_hat
    assert np.linalg.norm(x - truth) / np.linalg.norm(truth) < 1e-10


def test_weighting_tightens_intervals():
    sys, _ = robcal.study_system(seed=3)
    ols = robcal.ols(sys)
    rw = robcal.irls(sys, covariance_from_own_residuals=True)
    assert rw.converged
    assert len(rw.trace) >= 2
    assert np.all(ols.ci3 > robcal.wls(sys, robcal.optimal_weights(sys.sigma)).ci3)
    assert rw.param_names[0] == "k2_1"


def test_rank_deficiency_raises():
    b = np.ones((6, 2))
    with pytest.raises(robcal.RobcalError, match="E_RANK_DEFICIENT"):
        robcal.ols(robcal.System(b, np.ones(6), np.ones(6)))


def test_cli_entry(tmp_path):
    code, out, err = robcal.run(["simulate", "--markers", "1", "--repetitions", "1", "--out", str(tmp_path)])
    assert code == 0, err
    assert (tmp_path / "measurements.tsv").read_text().count("\n") == 16
    code, _, err = robcal.run(["calibrate", "--measurements", str(tmp_path / "missing.tsv")])
    assert code == 4
    assert err.startswith("error: E_IO:")
