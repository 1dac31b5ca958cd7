import sys

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from looptrees.planetree import PlaneTree

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def plane_trees(draw, min_size=1, max_size=40):
    """Random plane trees: vertex i hangs under one of the vertices before it."""
    n = draw(st.integers(min_size, max_size))
    kids = [[] for _ in range(n)]
    for v in range(1, n):
        kids[draw(st.integers(0, v - 1))].append(v)
    out, stack = [], [0]
    while stack:
        v = stack.pop()
        out.append(len(kids[v]))
        stack.extend(reversed(kids[v]))
    return PlaneTree(np.array(out, np.int64))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
