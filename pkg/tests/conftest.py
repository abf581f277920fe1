import numpy as np
import pytest

from sfqsim.engine import C_SELF_DEFAULT, Physics, paper_device
from sfqsim.transmon import CouplingParams, TransmonParams

OMEGA10 = 2 * np.pi * 4.958e9
ALPHA = -2 * np.pi * 220e6


@pytest.fixture(scope="session")
def paper_coupling():
    return CouplingParams(c_c=400e-18, c=C_SELF_DEFAULT)


@pytest.fixture(scope="session")
def ideal_qubit(paper_coupling):
    """Two-level closed-system device at the measured operating point."""
    return Physics(
        transmon=TransmonParams(omega10=OMEGA10, alpha=ALPHA, dim=2),
        coupling=paper_coupling,
    )


@pytest.fixture(scope="session")
def ideal_transmon(paper_coupling):
    """Four-level closed-system device (leakage levels present)."""
    return Physics(
        transmon=TransmonParams(omega10=OMEGA10, alpha=ALPHA, dim=4),
        coupling=paper_coupling,
    )


@pytest.fixture(scope="session")
def full_device():
    """Everything on: decoherence, quasiparticles, dispersion."""
    return paper_device()
