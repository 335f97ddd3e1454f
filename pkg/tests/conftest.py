import numpy as np
import pytest
from hypothesis import settings, HealthCheck

settings.register_profile('repo', deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('repo')

ACCEPTANCE_LINES = []


def random_ball(rng, n, radius=1.0):
    """Points uniform in the Bloch ball (scaled by ``radius``)."""
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return radius * v * rng.uniform(0, 1, size=(n, 1))**(1/3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance_report():
    def record(number:int, title:str, ok:bool, detail:str):
        line = f'criterion {number} [{"PASS" if ok else "FAIL"}] {title}: {detail}'
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section('acceptance criteria')
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
