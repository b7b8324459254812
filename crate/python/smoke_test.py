#!/usr/bin/env python3
"""Smoke test for the convbf_py extension module.

Builds the extension (cargo build -p convbf-py --release), loads it, and
checks a handful of known-good values against hand-computed expectations.

Usage: python3 python/smoke_test.py
"""
import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def build_and_import():
    subprocess.run(
        ["cargo", "build", "-p", "convbf-py", "--release"],
        cwd=REPO_ROOT,
        check=True,
    )
    built = REPO_ROOT / "target" / "release" / "libconvbf_py.so"
    dest = Path(__file__).resolve().parent / "convbf_py.so"
    shutil.copy2(built, dest)
    sys.path.insert(0, str(dest.parent))
    import convbf_py

    return convbf_py


def approx(a, b, tol=1e-12):
    return abs(a - b) <= tol


def main():
    m = build_and_import()

    # Tempering exponent gamma = rate / (rate + 1).
    assert approx(m.gamma_from_rate(1.0), 0.5)
    assert approx(m.gamma_from_rate(0.25), 0.2)
    assert m.gamma_from_rate(None) == 1.0
    assert m.gamma_from_rate() == 1.0

    # Covariance inflation Q + 1/(2*rate) * I.
    q = [[2.0, 0.5], [0.5, 1.0]]
    inflated = m.inflate_covariance(q, 0.05)
    assert approx(inflated[0][0], 2.0 + 10.0)
    assert approx(inflated[1][1], 1.0 + 10.0)
    assert approx(inflated[0][1], 0.5)
    assert m.inflate_covariance(q, None) == q

    # Scalar KF step: prior N(0, 1), A = 1, Q = 1, C = 1, R = 1, y = 2.
    # Predicted N(0, 2); posterior mean 2*2/3, variance 2/3.
    belief = m.GaussianBelief([0.0], [[1.0]])
    predicted = m.kf_predict(belief, [[1.0]], [[1.0]])
    assert approx(predicted.covariance[0][0], 2.0)
    posterior = m.kf_update(predicted, [[1.0]], [[1.0]], [2.0])
    assert approx(posterior.mean[0], 4.0 / 3.0, 1e-10)
    assert approx(posterior.covariance[0][0], 2.0 / 3.0, 1e-10)

    # Disabled thresholds make convkf_step coincide with predict+update.
    combined = m.convkf_step(belief, [[1.0]], [[1.0]], [[1.0]], [[1.0]], [2.0])
    assert combined.mean == posterior.mean
    assert combined.covariance == posterior.covariance

    # With alpha = 0.5 the effective Q is 1 + 1/(2*0.5) = 2, so the
    # predicted variance becomes 3 and the posterior variance 3/4.
    robust = m.convkf_step(
        belief, [[1.0]], [[1.0]], [[1.0]], [[1.0]], [2.0], alpha=0.5
    )
    assert approx(robust.covariance[0][0], 3.0 / 4.0, 1e-10)

    # Simulation is deterministic in the seed and has the right shapes.
    states, measurements = m.simulate_system("wiener", "a", 50, 7)
    states2, _ = m.simulate_system("wiener", "a", 50, 7)
    assert len(states) == 51 and len(measurements) == 50
    assert len(states[0]) == 4 and len(measurements[0]) == 2
    assert states == states2
    assert all(math.isfinite(v) for row in states for v in row)

    # A small benchmark campaign through the JSON interface.
    report = json.loads(
        m.run_experiment_json(
            json.dumps(
                {
                    "system": "wiener",
                    "case": "b",
                    "filter": "convkf",
                    "alpha": "off",
                    "beta": 0.01,
                    "runs": 5,
                    "steps": 50,
                    "particles": 100,
                    "seed": 42,
                }
            )
        )
    )
    for key in ("mean", "median", "q1", "q3", "min", "max", "failed_runs"):
        assert key in report, key
    assert report["failed_runs"] == 0
    assert len(report["per_run_rmse"]) == 5
    assert 0.0 < report["min"] <= report["median"] <= report["max"]

    # Errors surface as Python exceptions.
    try:
        m.GaussianBelief([0.0], [[-1.0]])
    except (ValueError, RuntimeError):
        pass
    else:
        raise AssertionError("non-SPD covariance should raise")

    print("smoke test: all checks passed")


if __name__ == "__main__":
    main()
