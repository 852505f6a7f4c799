import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def doubling():
    from hitlimits.maps import build_map

    return build_map("doubling")


@pytest.fixture(scope="session")
def ladder():
    from hitlimits.maps import build_map

    return build_map("ladder", rule="geometric-fast", J=40)


@pytest.fixture(scope="session")
def intermittent_half():
    from hitlimits.maps import build_map

    return build_map("intermittent", p=0.5)
