import dataclasses

import pytest

from rendersim.scene import default_camera, default_sampling, generate_synthetic_scene

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def tiny_camera():
    return default_camera("tiny")


def oracle_sampling(scale="tiny"):
    """Sampling with early termination off so oracle comparisons are exact."""
    return dataclasses.replace(default_sampling(scale), early_termination=False)


def scene(kind, seed=0, scale="tiny"):
    return generate_synthetic_scene(kind, seed, scale)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
