import pytest
from hypothesis import HealthCheck, settings

from coaxwave.profile import FiberProfile

settings.register_profile("coax", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("coax")


@pytest.fixture
def homogeneous():
    return FiberProfile.homogeneous()


@pytest.fixture
def two_layer():
    # delta = 0.05, core of half the radius
    return FiberProfile.two_layer(0.5, 1.05, 1.0)


@pytest.fixture
def matched():
    # eps mu = eps0 mu0 in every layer, so delta > 0 but delta_tilde = 0
    return FiberProfile((0.0, 0.4, 0.7, 1.0), (1.2, 1 / 1.1, 1.0), (1 / 1.2, 1.1, 1.0))


@pytest.fixture
def three_layer():
    return FiberProfile((0.0, 0.3, 0.65, 1.0), (1.04, 0.97, 1.0), (0.98, 1.02, 1.0))


# acceptance bookkeeping: one line per criterion in the terminal summary
_CRITERIA = {}


@pytest.fixture
def record():
    def _record(number, title, label, passed, detail):
        entry = _CRITERIA.setdefault(number, {"title": title, "parts": []})
        entry["parts"].append((label, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} criterion {number} [{label}]: {detail}")
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = all(p for _, p, _ in entry["parts"])
        detail = "; ".join(f"{label}{'' if p else ' FAILED'}: {d}"
                           for label, p, d in entry["parts"])
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'} criterion {number} {entry['title']}: {detail}")
