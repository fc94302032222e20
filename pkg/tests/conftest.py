import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


def random_sl2(rng):
    x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return x / np.sqrt(np.linalg.det(x))


def random_pd(rng, d=4, shift=0.2):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return g @ g.conj().T + shift * np.eye(d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def gauge_equivalent_target(rng, n, source="psi-", shift=3.0):
    """Random H_1 (+ shift) with identity elsewhere, dressed by a random network symmetry.

    Such targets are simple-reachable from the start, and the dressing hides
    that fact from any method that does not undo the symmetry.
    """
    from netlocc.network import EdgeSymmetry, NetworkGraph
    from netlocc.reachability import TargetSpec

    g = NetworkGraph.cycle(n, source)
    sym = EdgeSymmetry({e: random_sl2(rng) for e, _ in g.edges}, source)
    base = {j: np.eye(4, dtype=complex) for j in g.nodes}
    base[1] = random_pd(rng) + shift * np.eye(4)
    roots = {j: sqrtm_pd(base[j]) @ sym.on_party(g, j) for j in g.nodes}
    return TargetSpec(g, roots)


def sqrtm_pd(h):
    w, v = np.linalg.eigh(h)
    return (v * np.sqrt(w)) @ v.conj().T
