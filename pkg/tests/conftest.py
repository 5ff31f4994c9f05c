import io
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO_ROOT / "fixtures"


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: spec acceptance criteria (one test per criterion)")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or item.get_closest_marker("acceptance") is None:
        return
    label = (item.function.__doc__ or item.name).strip().splitlines()[0]
    status = "PASS" if report.passed else "FAIL" if report.failed else report.outcome.upper()
    terminal = item.config.pluginmanager.get_plugin("terminalreporter")
    if terminal is not None:
        terminal.write_line(f"[ACCEPTANCE {status}] {label}")


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    assert FIXTURE_DIR.exists(), "run scripts/make_fixtures.py first"
    return FIXTURE_DIR


def solid_png(gray: int, side: int = 16) -> bytes:
    arr = np.full((side, side, 3), gray, dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, "PNG")
    return buf.getvalue()


def array_png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr.astype(np.uint8)).save(buf, "PNG")
    return buf.getvalue()


def iris_like(n_per_cluster: int = 50, data_seed: int = 1, spread_scale: float = 3.5):
    """150-sample 4-D fixture: three overlapping clusters, pinned seed."""
    rng = np.random.default_rng(data_seed)
    centers = np.array([[5.0, 3.4, 1.5, 0.2], [5.9, 2.8, 4.3, 1.3], [6.6, 3.0, 5.6, 2.1]])
    spread = np.array([[0.35, 0.38, 0.17, 0.10], [0.52, 0.31, 0.47, 0.20],
                       [0.64, 0.32, 0.55, 0.27]]) * spread_scale
    X = np.vstack([rng.normal(c, s, size=(n_per_cluster, 4))
                   for c, s in zip(centers, spread)])
    ids = [f"s{i:03d}" for i in range(X.shape[0])]
    return ids, X
