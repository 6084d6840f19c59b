import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_event_list(gen, width=16, height=12, n=200, t_max=100_000):
    """Sorted random events with at most one event per (t, x, y)."""
    from evsynth.core import EVENT_DTYPE, EventList

    t = gen.integers(0, t_max, size=n, dtype=np.uint32)
    x = gen.integers(0, width, size=n, dtype=np.uint16)
    y = gen.integers(0, height, size=n, dtype=np.uint16)
    p = gen.choice([-1, 1], size=n).astype(np.int8)
    rec = np.empty(n, dtype=EVENT_DTYPE)
    rec["t"], rec["x"], rec["y"], rec["p"] = t, x, y, p
    rec = rec[np.lexsort((rec["x"], rec["y"], rec["t"]))]
    keep = np.ones(n, dtype=bool)
    same = (np.diff(rec["t"]) == 0) & (np.diff(rec["x"]) == 0) & (np.diff(rec["y"]) == 0)
    keep[1:][same] = False
    return EventList(width, height, rec[keep])
