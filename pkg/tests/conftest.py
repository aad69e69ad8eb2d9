from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import pytest

from dcmstep.sim.config import load_config
from dcmstep.sim.runner import run_scenario

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}" + (f": {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def config(name):
    return load_config(CONFIGS / f"{name}.yaml")


def _run_named(name, overrides):
    return run_scenario(config(name).replace(**overrides))


@pytest.fixture(scope="session")
def multibody_runs():
    """The multibody walking scenario without and with the push, run side by side."""
    jobs = {"walk": {"push_fraction": 0.0}, "push": {}}
    with ProcessPoolExecutor(max_workers=2) as pool:
        futures = {k: pool.submit(_run_named, "scenario1_multibody", v) for k, v in jobs.items()}
        return {k: f.result() for k, f in futures.items()}
