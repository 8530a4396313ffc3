"""Two-qubit states and the metrics reported for them.

Basis convention: ``|H> = |0>`` and ``|V> = |1>``; the two-qubit basis is
ordered ``|HH>, |HV>, |VH>, |VV>`` with Alice's qubit first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from eacode import qmath
from eacode.errors import DomainError, InvariantError

TRACE_TOL = 1e-10
PSD_TOL = 1e-9
NORM_TOL = 1e-10

PHI_PLUS_KET = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
SIGMA_YY = np.kron(qmath.SIGMA_Y, qmath.SIGMA_Y)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated 4x4 two-qubit density matrix.

    Construction checks Hermiticity, unit trace and positivity (eigenvalues
    down to ``-1e-9`` are accepted as rounding noise).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = qmath.as_matrix(self.matrix)
        if m.shape != (4, 4):
            raise InvariantError(f"density matrix must be 4x4, got {m.shape}")
        if not qmath.is_hermitian(m):
            raise InvariantError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1) > TRACE_TOL:
            raise InvariantError(f"density matrix trace is {tr.real:.12g}, expected 1")
        lam_min = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
        if lam_min < -PSD_TOL:
            raise InvariantError(f"density matrix has negative eigenvalue {lam_min:.3e}")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def eigenvalues(self) -> np.ndarray:
        return qmath.eig_hermitian(self.matrix)[0]


@dataclass(frozen=True)
class StateMetrics:
    fidelity: float
    tangle: float
    purity: float


def as_density_matrix(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    return DensityMatrix(np.asarray(rho, dtype=complex))


def from_ket(ket) -> DensityMatrix:
    k = np.asarray(ket, dtype=complex).reshape(-1)
    n = np.linalg.norm(k)
    if n == 0:
        raise DomainError("zero vector is not a state")
    return DensityMatrix(qmath.projector(k / n))


def phi_plus() -> DensityMatrix:
    """``|Phi+> = (|HH> + |VV>)/sqrt(2)`` as a density matrix."""
    return DensityMatrix(qmath.projector(PHI_PLUS_KET))


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(qmath.I4 / 4)


def werner(p: float) -> DensityMatrix:
    """``p |Phi+><Phi+| + (1 - p) I/4`` for ``0 <= p <= 1``."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"Werner parameter must lie in [0, 1], got {p}")
    return DensityMatrix(p * qmath.projector(PHI_PLUS_KET) + (1 - p) * qmath.I4 / 4)


def project_to_density_matrix(m) -> DensityMatrix:
    """Closest density matrix to a Hermitian matrix in Frobenius norm.

    Eigenvalues are projected onto the probability simplex, which is the
    standard fix-up for linear-inversion tomography output.
    """
    a = qmath.as_matrix(m)
    vals, vecs = qmath.eig_hermitian(0.5 * (a + a.conj().T))
    # Euclidean projection of the (descending) eigenvalues onto the simplex.
    css = np.cumsum(vals)
    k = np.arange(1, len(vals) + 1)
    cond = vals - (css - 1) / k > 0
    r = k[cond][-1]
    shift = (css[r - 1] - 1) / r
    w = np.clip(vals - shift, 0, None)
    return DensityMatrix((vecs * w) @ vecs.conj().T)


def _clamped(rho):
    vals, vecs = qmath.eig_hermitian(np.asarray(rho))
    vals = np.clip(vals, 0.0, None)
    return vals, vecs


def fidelity_with_pure(rho, target) -> float:
    """Overlap ``<psi|rho|psi>`` with a normalized pure state."""
    psi = np.asarray(target, dtype=complex).reshape(-1)
    if psi.shape != (4,):
        raise DomainError(f"target must be a 4-component vector, got {psi.shape}")
    if abs(np.linalg.norm(psi) - 1) > NORM_TOL:
        raise DomainError(f"target state is not normalized (norm {np.linalg.norm(psi):.12g})")
    m = as_density_matrix(rho).matrix
    f = np.vdot(psi, m @ psi)
    return float(np.clip(f.real, 0.0, 1.0))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`` of two states."""
    a = as_density_matrix(rho).matrix
    b = as_density_matrix(sigma).matrix
    vals, vecs = _clamped(a)
    sqrt_a = (vecs * np.sqrt(vals)) @ vecs.conj().T
    inner = sqrt_a @ b @ sqrt_a
    lam = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(np.clip(np.sum(np.sqrt(lam)) ** 2, 0.0, 1.0))


def tangle(rho) -> float:
    """Wootters tangle (squared concurrence) of a two-qubit state."""
    m = as_density_matrix(rho).matrix
    vals, vecs = _clamped(m)
    sqrt_rho = (vecs * np.sqrt(vals)) @ vecs.conj().T
    flipped = SIGMA_YY @ m.conj() @ SIGMA_YY
    # sqrt(rho) rho~ sqrt(rho) is Hermitian with the same spectrum as rho rho~.
    h = sqrt_rho @ flipped @ sqrt_rho
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(0.5 * (h + h.conj().T)), 0.0, None))[::-1]
    c = max(0.0, lam[0] - lam[1] - lam[2] - lam[3])
    return float(min(c * c, 1.0))


def purity(rho) -> float:
    m = as_density_matrix(rho).matrix
    return float(np.clip(np.real(np.trace(m @ m)), 0.25, 1.0))


def metrics(rho, target=PHI_PLUS_KET) -> StateMetrics:
    return StateMetrics(fidelity_with_pure(rho, target), tangle(rho), purity(rho))


# -- file format: 4x4 nested lists of [re, im] pairs -----------------------

def to_json_obj(rho) -> list:
    m = as_density_matrix(rho).matrix
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def from_json_obj(obj) -> DensityMatrix:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"malformed state matrix: {exc}") from exc
    if arr.shape != (4, 4, 2):
        raise DomainError(f"state JSON must be 4x4 [re, im] pairs, got shape {arr.shape}")
    return DensityMatrix(arr[..., 0] + 1j * arr[..., 1])


def save_state(rho, path) -> None:
    Path(path).write_text(json.dumps({"matrix": to_json_obj(rho)}, indent=2) + "\n")


def load_state(path) -> DensityMatrix:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict):
        obj = obj.get("matrix")
    return from_json_obj(obj)
