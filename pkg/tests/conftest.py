import pytest

from cellforest.complex_core import build_cubical_torus, build_simplex_skeleton, bundled_complex


@pytest.fixture(scope="session")
def k3():
    return build_simplex_skeleton(3, 1)


@pytest.fixture(scope="session")
def k4():
    return bundled_complex("k4")


@pytest.fixture(scope="session")
def rp2():
    return bundled_complex("rp2")


@pytest.fixture(scope="session")
def torus2():
    return build_cubical_torus(2, 2)


@pytest.fixture(scope="session")
def torus3():
    return build_cubical_torus(2, 3)


@pytest.fixture(scope="session")
def simplex6():
    return build_simplex_skeleton(6, 2)


# the 6-vertex projective plane, as sorted 0-based vertex triples
RP2_TRIANGLES = [
    (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 1, 5),
    (1, 2, 4), (2, 3, 5), (1, 3, 4), (2, 4, 5), (1, 3, 5),
]


@pytest.fixture(scope="session")
def rp2_in_simplex(simplex6):
    keys = list(simplex6.keys[2])
    return sorted(keys.index(t) for t in RP2_TRIANGLES)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
