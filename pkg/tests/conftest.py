"""Shared fixtures and the acceptance summary hook.

The acceptance tests append one record per criterion; the terminal summary
prints them as a block so a single pytest run shows the full scorecard.
"""

import time

import numpy as np
import pytest

import forwardint as fw

ACCEPTANCE_RESULTS = []


def record_acceptance(number, label, passed, detail):
    ACCEPTANCE_RESULTS.append((number, label, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, label, passed, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"ACCEPTANCE {number} ({label}): {verdict} - {detail}")


@pytest.fixture(scope="session")
def rotor():
    # 2-D skew plant: one conserved oscillation, actuation and measurement
    # both through the second coordinate.
    return fw.abstract_system([[0.0, 1.0], [-1.0, 0.0]],
                              [0.0, 1.0], [1.0, 0.0], np.eye(2))


@pytest.fixture(scope="session")
def rotor_design(rotor):
    return fw.gain(rotor, fw.forwarding_operator(rotor), 0.3)


@pytest.fixture(scope="session")
def headline_run():
    """The reference closed-loop string run, executed once per session.

    Ramp initial profile, saturated flux at level 0.2, weight 0.3, fine
    grid dx = dt = 0.002 over 20 s. Returns (config, columns, wall_time).
    """
    cfg = fw.WaveConfig(dx=0.002, dt=0.002, t_end=20.0, mu=0.3,
                        psi=fw.saturation(0.2))
    t0 = time.perf_counter()
    rows = fw.simulate(cfg)
    elapsed = time.perf_counter() - t0
    return cfg, fw.rows_to_arrays(rows), elapsed
