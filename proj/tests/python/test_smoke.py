import math

import numpy as np
import pytest

import qecdm


def test_version():
    assert qecdm.__version__ == "0.1.0"
    assert "model revision" in qecdm.version()


def test_fit_roundtrip():
    samples = qecdm.synthetic_series(2e-3, 3.0, 8)
    gamma_n, gamma_t, residual = qecdm.fit_crash_rate(samples, 3.0)
    assert gamma_n == pytest.approx(2e-3, rel=1e-9)
    assert gamma_t == pytest.approx(2e-3 / 3.0, rel=1e-9)
    assert residual < 1e-12


def test_bare_memory_closed_form():
    p = qecdm.bare_memory_crash(0.0, 1e-2, 10.0)
    assert p == pytest.approx(0.5 * (1 - math.exp(-0.2)), abs=1e-9)


def test_codes():
    assert qecdm.syndrome("bit-flip-3", "XII") == 2
    assert qecdm.syndrome("bit-flip-3", "IIX") == 1
    seen = {qecdm.syndrome("five-qubit", "I" * q + p + "I" * (4 - q)) for q in range(5) for p in "XYZ"}
    assert len(seen) == 15 and 0 not in seen
    c0, c1 = qecdm.codewords("five-qubit")
    assert c0.shape == (32,)
    assert abs(np.vdot(c0, c1)) < 1e-12
    assert np.linalg.norm(c0) == pytest.approx(1.0)


def test_noiseless_point():
    e = qecdm.Experiment()
    e.n_steps = 3
    p = qecdm.evaluate_point(e, 0.0)
    assert p["ok"]
    assert all(s[2] == 0.0 for s in p["samples"])
    assert p["tau"] == pytest.approx(24 * math.pi)


def test_weak_noise_point_beats_bare_qubit():
    e = qecdm.Experiment()
    e.n_steps = 3
    e.protocol = qecdm.Protocol.B
    p = qecdm.evaluate_point(e, 1e-3)
    assert p["ok"] and p["ratio"] < 1.0


def test_cli_parse_error():
    code, _, err = qecdm.run_cli(["bogus"])
    assert code == 2
    assert err
