import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src", "services"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo or regression runs (deselect with -m 'not slow')")


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def results_dir(tmp_path, monkeypatch):
    """Route every default output path into a temporary directory."""
    from probe_lab import analyzer, lab_config, report_generator, verify

    target = tmp_path / "results"
    monkeypatch.setattr(lab_config, "RESULTS_DIR", target)
    monkeypatch.setattr(report_generator, "RESULTS_DIR", target)
    monkeypatch.setattr(verify, "RESULTS_DIR", target)
    monkeypatch.setattr(analyzer, "RESULTS_DIR", target)
    return target
