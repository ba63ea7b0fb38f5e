import pytest

from owfecs.crossing import build_crossing_set
from owfecs.farm import generate_candidates, to_per_unit
from owfecs.instances import T5_ASYM_RANGE_KM, T5_RANGE_KM, t5, t5_asymmetric


class Case:
    """A layout bundled with its per-unit data, candidates and crossings."""

    def __init__(self, layout, max_range_km):
        self.layout = layout
        self.net = to_per_unit(layout)
        self.candidates = generate_candidates(layout, max_range_km)
        self.crossings = build_crossing_set(self.candidates)


@pytest.fixture(scope="session")
def t5_case():
    return Case(t5(), T5_RANGE_KM)


@pytest.fixture(scope="session")
def asym_case():
    return Case(t5_asymmetric(), T5_ASYM_RANGE_KM)


_ACCEPTANCE_KEY = pytest.StashKey[dict]()


class _Recorder:
    def __init__(self, results):
        self.results = results

    def __call__(self, number, title):
        return _Criterion(self.results, number, title)


class _Criterion:
    def __init__(self, results, number, title):
        self.results = results
        self.number = number
        self.title = title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        note = self.detail if ok else f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        line = f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}" + (f"  ({note})" if note else "")
        self.results[self.number] = line
        print(line)
        return False


@pytest.fixture(scope="session")
def acceptance(request):
    results = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})
    return _Recorder(results)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_ACCEPTANCE_KEY, {})
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
