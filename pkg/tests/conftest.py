import pytest

from zpsync import SourceModel, SystemConfig, exponential_pdp, noise_variance_from_ebn0

# One line per acceptance criterion, printed after the terminal summary so the
# PASS/FAIL verdicts survive pytest's output capture.
_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance():
    def check(tag, ok, text):
        _ACCEPTANCE_LINES.append(f"[{tag}] {'PASS' if ok else 'FAIL'}  {text}")
        assert ok, f"{tag}: {text}"

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cfg_v():
    """Baseline scenario with the Gaussian source used for density work."""
    return SystemConfig(source_model=SourceModel.GAUSSIAN_IID)


@pytest.fixture(scope="session")
def pdp_v():
    return exponential_pdp(10, 0.5)


@pytest.fixture(scope="session")
def sw2_v(cfg_v, pdp_v):
    return noise_variance_from_ebn0(cfg_v, pdp_v)
