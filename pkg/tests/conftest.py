import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from opshift.calculus import OperatorTuple
from opshift.harness.instances import coupled_path, random_contraction, shared_basis_path
from opshift.rng import SplitMix64, haar_unitary

settings.register_profile("opshift", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("opshift")


def complex_matrix(rng, d, scale=1.0):
    return scale * rng.complex_normals((d, d))


def commuting_normal_tuple(rng, n, d, selfadjoint=False):
    q = haar_unitary(rng, d)
    mats = []
    for _ in range(n):
        if selfadjoint:
            diag = rng.uniforms(d, -1, 1)
        else:
            diag = rng.uniforms(d, -1, 1) + 1j * rng.uniforms(d, -1, 1)
            diag = diag / max(1.0, np.max(np.abs(diag)))
        mats.append(q @ np.diag(diag) @ q.conj().T)
    return OperatorTuple(tuple(mats))


@pytest.fixture
def rng():
    return SplitMix64(20240601)


def build_path(kind, n, d, seed):
    r = SplitMix64(seed)
    if kind == "shared_sa":
        return shared_basis_path(r, n, d, True)
    if kind == "shared_normal":
        return shared_basis_path(r, n, d, False)
    if kind == "coupled_sa":
        return coupled_path(r, n, d, True)
    if kind == "coupled_normal":
        return coupled_path(r, n, d, False)
    raise ValueError(kind)


@pytest.fixture
def make_path():
    return build_path



def adversarial_path(seed):
    """Endpoint pairs that break path commutativity in different ways."""
    from opshift.perturbation import PathSpec

    r = SplitMix64(seed)
    kind = seed % 5
    d = 3 + seed % 3
    if kind == 0:  # commuting endpoints in different bases
        a = commuting_normal_tuple(r, 2, d).mats
        b = commuting_normal_tuple(r, 2, d).mats
    elif kind == 1:  # commuting start, generic end
        a = commuting_normal_tuple(r, 2, d).mats
        b = tuple(random_contraction(r, d) for _ in range(2))
    elif kind == 2:  # commuting but not contractive
        a = tuple(1.6 * m for m in commuting_normal_tuple(r, 2, d).mats)
        b = tuple(1.6 * m for m in commuting_normal_tuple(r, 2, d).mats)
        q = haar_unitary(r, d)
        b = tuple(q @ m @ q.conj().T for m in b)
    elif kind == 3:  # constant non-commuting path
        a = tuple(random_contraction(r, d) for _ in range(2))
        b = a
    else:  # small non-commuting perturbation of a commuting pair
        a = commuting_normal_tuple(r, 2, d).mats
        b = (a[0] + 1e-6 * r.complex_normals((d, d)), a[1])
    return PathSpec.from_mats(a, b)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
