import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mvscc.frames_io import Frame, Sequence

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_frame(rng, w, h):
    return Frame(
        rng.integers(0, 256, (h, w), dtype=np.uint8),
        rng.integers(0, 256, (h // 2, w // 2), dtype=np.uint8),
        rng.integers(0, 256, (h // 2, w // 2), dtype=np.uint8),
    )


def constant_frame(w, h, y, u=128, v=128):
    return Frame(
        np.full((h, w), y, np.uint8), np.full((h // 2, w // 2), u, np.uint8), np.full((h // 2, w // 2), v, np.uint8)
    )


def random_views(seed, n_views, w, h, n_frames):
    rng = np.random.default_rng(seed)
    return [Sequence([random_frame(rng, w, h) for _ in range(n_frames)]) for _ in range(n_views)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LOG: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(ACCEPTANCE_LOG[k])
