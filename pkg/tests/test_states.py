import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eacode import states
from eacode.errors import DomainError, InvariantError
from eacode.states import (
    PHI_PLUS_KET,
    DensityMatrix,
    fidelity,
    fidelity_with_pure,
    phi_plus,
    tangle,
    werner,
)

unit = st.floats(min_value=0.0, max_value=1.0)


def spin_flip_tangle(m):
    """Independent route: eigenvalues of the non-Hermitian rho * rho~."""
    yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
    r = m @ yy @ m.conj() @ yy
    lam = np.sort(np.sqrt(np.clip(np.linalg.eigvals(r).real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3]) ** 2


def test_phi_plus_entries():
    m = phi_plus().matrix
    expected = np.zeros((4, 4))
    for i in (0, 3):
        for j in (0, 3):
            expected[i, j] = 0.5
    assert np.allclose(m, expected, atol=1e-15)
    assert abs(np.trace(m) - 1) < 1e-15
    assert fidelity_with_pure(phi_plus(), PHI_PLUS_KET) == pytest.approx(1, abs=1e-12)


def test_werner_endpoints():
    assert np.allclose(werner(1).matrix, phi_plus().matrix)
    assert np.allclose(werner(0).matrix, np.eye(4) / 4)


@pytest.mark.parametrize("p", [-0.1, 1.1])
def test_werner_domain(p):
    with pytest.raises(DomainError):
        werner(p)


def test_werner_spectrum():
    vals = werner(0.5).eigenvalues()
    assert np.allclose(vals, [0.625, 0.125, 0.125, 0.125], atol=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 0.9, 1.0])
def test_fidelity_of_werner(p):
    # Oracle: explicit contraction <psi|rho|psi> with the Werner matrix built by hand.
    m = p * np.outer(PHI_PLUS_KET, PHI_PLUS_KET.conj()) + (1 - p) * np.eye(4) / 4
    direct = sum(PHI_PLUS_KET[i].conj() * m[i, j] * PHI_PLUS_KET[j]
                 for i in range(4) for j in range(4)).real
    assert direct == pytest.approx((1 + 3 * p) / 4, abs=1e-12)
    assert fidelity_with_pure(werner(p), PHI_PLUS_KET) == pytest.approx(direct, abs=1e-12)


def test_fidelity_maximally_mixed():
    assert fidelity_with_pure(states.maximally_mixed(), PHI_PLUS_KET) == pytest.approx(0.25)


def test_fidelity_rejects_unnormalized_target():
    with pytest.raises(DomainError):
        fidelity_with_pure(phi_plus(), 2 * PHI_PLUS_KET)


@given(unit, unit)
def test_uhlmann_fidelity_properties(p, r):
    f = fidelity(werner(p), werner(r))
    assert 0 <= f <= 1
    assert fidelity(werner(p), werner(p)) == pytest.approx(1, abs=1e-7)
    assert f == pytest.approx(fidelity(werner(r), werner(p)), abs=1e-7)


def test_uhlmann_reduces_to_overlap_for_pure_target():
    assert fidelity(werner(0.3), phi_plus()) == pytest.approx(
        fidelity_with_pure(werner(0.3), PHI_PLUS_KET), abs=1e-7)


def test_tangle_examples():
    assert tangle(phi_plus()) == pytest.approx(1, abs=1e-12)
    assert tangle(states.maximally_mixed()) == 0


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.4, 0.7, 0.95, 1.0])
def test_tangle_werner_closed_form(p):
    m = werner(p).matrix
    oracle = spin_flip_tangle(m)
    assert oracle == pytest.approx(max(0, (3 * p - 1) / 2) ** 2, abs=1e-7)
    assert tangle(werner(p)) == pytest.approx(oracle, abs=1e-7)


def test_tangle_zero_below_one_third_and_increasing_above():
    below = [tangle(werner(p)) for p in np.linspace(0, 1 / 3, 20)]
    assert max(below) < 1e-12
    above = [tangle(werner(p)) for p in np.linspace(1 / 3 + 1e-3, 1, 50)]
    assert np.all(np.diff(above) > 0)


def test_product_state_has_zero_tangle():
    ket = np.kron([1, 0], [np.cos(0.3), np.sin(0.3)])
    assert tangle(states.from_ket(ket)) == pytest.approx(0, abs=1e-12)


@given(unit)
def test_metrics_ranges(p):
    m = states.metrics(werner(p))
    assert 0 <= m.fidelity <= 1
    assert 0 <= m.tangle <= 1
    assert 0.25 <= m.purity <= 1


def test_density_matrix_invariants():
    with pytest.raises(InvariantError):
        DensityMatrix(np.eye(4) / 2)
    with pytest.raises(InvariantError):
        DensityMatrix(np.diag([1.5, -0.5, 0, 0]))
    bad = np.eye(4, dtype=complex) / 4
    bad[0, 1] = 0.1j
    with pytest.raises(InvariantError):
        DensityMatrix(bad)
    # Rounding-size negative eigenvalues are tolerated.
    DensityMatrix(np.diag([0.5 + 5e-10, 0.5, -5e-10, 0]))


def test_project_to_density_matrix():
    m = np.diag([0.7, 0.5, -0.1, -0.1])
    rho = states.project_to_density_matrix(m)
    assert np.allclose(rho.matrix, np.diag([0.6, 0.4, 0, 0]))


def test_state_json_round_trip(tmp_path):
    rho = states.from_ket(np.array([1, 1j, 0, 1]) / np.sqrt(3))
    path = tmp_path / "state.json"
    states.save_state(rho, path)
    data = json.loads(path.read_text())
    assert np.asarray(data["matrix"]).shape == (4, 4, 2)
    assert np.allclose(states.load_state(path).matrix, rho.matrix)


def test_state_json_bad_shape():
    with pytest.raises(DomainError):
        states.from_json_obj([[1, 0], [0, 0]])
