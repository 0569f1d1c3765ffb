import pytest
from hypothesis import settings

from noonscope.interference import InterferenceModel, PhotonBudget
from noonscope.optics import BeamGeometry


settings.register_profile("fast", max_examples=20)
settings.register_profile("thorough", max_examples=500)

# published operating points
V_QUANTUM, V_CLASSICAL = 0.952, 0.971
DPHI_SNR = 0.0626  # step phase implied by the published SNRs through the small-signal formula


@pytest.fixture
def paper_geometry():
    return BeamGeometry(11.25, 45.0)


@pytest.fixture
def quantum_point():
    return InterferenceModel(2, V_QUANTUM, 0.41), PhotonBudget(460.0, 2)


@pytest.fixture
def classical_point():
    return InterferenceModel(1, V_CLASSICAL, 0.66), PhotonBudget(920.0, 1)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(capsys):
    """Record and print one acceptance line, then assert it."""

    def check(label, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert passed, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
