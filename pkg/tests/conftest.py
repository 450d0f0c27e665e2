import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from tournament_manip import ProbTournament
from tournament_manip.tournament import edges

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

RULES = ("rdm", "rseb", "rkoth")
MATCHING = ("rdm", "rseb")


@st.composite
def tournaments(draw, min_n=2, max_n=5):
    n = draw(st.integers(min_n, max_n))
    vals = draw(st.lists(st.floats(0.0, 1.0), min_size=len(edges(n)), max_size=len(edges(n))))
    return ProbTournament.from_upper(n, vals)


@st.composite
def strict_tournaments(draw, min_n=2, max_n=5, eps=None):
    n = draw(st.integers(min_n, max_n))
    e = draw(st.sampled_from([0.1, 0.25, 0.4, 0.5])) if eps is None else eps
    bits = draw(st.lists(st.booleans(), min_size=len(edges(n)), max_size=len(edges(n))))
    return ProbTournament.from_upper(n, [0.5 + e if b else 0.5 - e for b in bits]), e


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion."""
    lines = request.config._acceptance_lines

    def record(number, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
