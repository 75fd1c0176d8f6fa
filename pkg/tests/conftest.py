import numpy as np
import pytest

from milacsim import PhysicalConstants, build_coupling_matrix, build_geometry

FREQUENCY = 28e9

# criterion name -> (passed, detail), printed in the terminal summary
_ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_acceptance(name, passed, detail=""):
    _ACCEPTANCE_RESULTS[name] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, (passed, detail) in _ACCEPTANCE_RESULTS.items():
        status = "PASS" if passed else "FAIL"
        line = f"  [{status}] {name}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def coupling_cache():
    """Lazy session-wide cache of dipole coupling matrices.

    Keyed by (n_antennas, spacing_in_wavelengths, quad_order); every test
    pulls from here so quadrature runs once per geometry.
    """
    cache = {}

    def get(n_antennas, spacing, quad_order=64, n_x=8):
        key = (n_antennas, spacing, quad_order, n_x)
        if key not in cache:
            geom = build_geometry(n_antennas, n_x, spacing, FREQUENCY)
            consts = PhysicalConstants.for_wavelength(geom.wavelength)
            cache[key] = build_coupling_matrix(geom, consts, quad_order)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
