import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from nlvar.core import ModelShape, NlVarModel, NodeMap, RangeBounds, VarCoefficients
from nlvar.synthetic import random_node_maps

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


@st.composite
def node_maps(draw, max_units=5):
    m = draw(st.integers(1, max_units))
    lower = draw(st.floats(-5, 5))
    span = draw(st.floats(0.1, 10))
    raw = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m)))
    w = draw(st.lists(st.floats(0.05, 3.0), min_size=m, max_size=m))
    k = draw(st.lists(st.floats(-3.0, 3.0), min_size=m, max_size=m))
    bounds = RangeBounds(lower, lower + span)
    return NodeMap(raw * (bounds.span / raw.sum()), w, k, bounds.lower, bounds)


def random_model(rng, n, p, m, scale=0.4):
    lower = rng.uniform(-2.0, 0.0, n)
    ranges = [RangeBounds(lo, lo + s) for lo, s in zip(lower, rng.uniform(0.5, 3.0, n))]
    maps = random_node_maps(ModelShape(n, p, m), ranges, int(rng.integers(2**31)))
    return NlVarModel(ModelShape(n, p, m), VarCoefficients(scale * rng.standard_normal((p, n, n))), maps)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def unit_map():
    """M=1, alpha=1, w=1, k=0, b=0: f is the plain logistic function."""
    return NodeMap([1.0], [1.0], [0.0], 0.0, RangeBounds(0.0, 1.0))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_line():
    """Record a one-line PASS/FAIL verdict; the lines are echoed at the end of the run."""
    def record(number, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
