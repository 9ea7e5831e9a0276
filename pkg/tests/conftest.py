import sys
from fractions import Fraction
from pathlib import Path

from hypothesis import settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from crncalc.pmf import Pmf  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def pmfs(draw, max_value=8, max_points=4, dim=1):
    if dim == 1:
        keys = st.integers(0, max_value)
    else:
        keys = st.tuples(*[st.integers(0, max_value)] * dim)
    weights = draw(st.dictionaries(keys, st.integers(1, 12), min_size=1, max_size=max_points))
    total = sum(weights.values())
    return Pmf({k: Fraction(w, total) for k, w in weights.items()})


@st.composite
def unit_rationals(draw, max_den=12):
    den = draw(st.integers(1, max_den))
    return Fraction(draw(st.integers(0, den)), den)



# acceptance criteria are tagged with @pytest.mark.criterion(number, title)
# and summarized once at the end of the run
_markers: dict[str, tuple[int, str]] = {}
_criteria: dict[int, tuple[str, str, float]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _markers[item.nodeid] = tuple(mark.args)


def pytest_runtest_logreport(report):
    marker = _markers.get(report.nodeid)
    if marker is None or (report.when != "call" and report.passed):
        return
    number, title = marker
    _criteria[number] = (title, "PASS" if report.passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, outcome, seconds = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d}: {outcome}  {seconds:8.3f} s  {title}")
