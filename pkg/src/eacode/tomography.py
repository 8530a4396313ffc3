"""Two-qubit state tomography from coincidence counts.

The measurement set is every pair of the six Pauli eigenstates
(X+, X-, Y+, Y-, Z+, Z-) on Alice's and Bob's qubit, 36 projectors in all,
ordered lexicographically with Alice's state first.

Reconstruction
--------------
``linear_inversion`` fits the Pauli expansion of rho (plus an overall
count rate) by least squares; the result is Hermitian with unit trace but
may have negative eigenvalues.

``mle_reconstruct`` maximizes the Poisson likelihood of the counts with
``rho = T^dagger T / Tr[T^dagger T]`` for lower-triangular ``T`` (16 real
parameters).  The overall count rate is profiled out exactly: for a given
rho the likelihood is maximized by ``N = sum(counts) / sum_i p_i``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from eacode import qmath
from eacode.errors import ConvergenceError, DomainError
from eacode.states import (
    PHI_PLUS_KET,
    DensityMatrix,
    as_density_matrix,
    fidelity_with_pure,
    maximally_mixed,
    metrics,
    project_to_density_matrix,
    tangle,
    to_json_obj,
)

_S = 1 / math.sqrt(2)
EIGENSTATES = {
    "X+": np.array([_S, _S], dtype=complex),
    "X-": np.array([_S, -_S], dtype=complex),
    "Y+": np.array([_S, 1j * _S], dtype=complex),
    "Y-": np.array([_S, -1j * _S], dtype=complex),
    "Z+": np.array([1, 0], dtype=complex),
    "Z-": np.array([0, 1], dtype=complex),
}
LABELS = tuple(EIGENSTATES)

# Lower-triangular positions of T beyond the diagonal.
_LOWER = [(i, j) for i in range(4) for j in range(i)]
_J = np.eye(4)[::-1]


@dataclass(frozen=True)
class TomoSettings:
    pairs: tuple[tuple[str, str], ...] = tuple((a, b) for a in LABELS for b in LABELS)

    def __post_init__(self):
        pairs = tuple((str(a), str(b)) for a, b in self.pairs)
        for a, b in pairs:
            if a not in EIGENSTATES or b not in EIGENSTATES:
                raise DomainError(f"unknown eigenstate label in setting ({a}, {b})")
        if len(set(pairs)) != len(pairs):
            raise DomainError("tomography settings must be distinct")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def projectors(self) -> np.ndarray:
        """Stacked 4x4 projectors, shape ``(len(self), 4, 4)``."""
        return np.array([np.kron(qmath.projector(EIGENSTATES[a]), qmath.projector(EIGENSTATES[b]))
                         for a, b in self.pairs])


CANONICAL_SETTINGS = TomoSettings()


@dataclass(frozen=True)
class TomoCounts:
    counts: np.ndarray
    settings: TomoSettings = CANONICAL_SETTINGS
    duration: str | None = None

    def __post_init__(self):
        # Floats are allowed so expected (noise-free) counts can be fitted too.
        c = np.array(self.counts, dtype=float).reshape(-1)
        if c.shape != (len(self.settings),):
            raise DomainError(f"expected {len(self.settings)} counts, got {c.size}")
        if not np.all(np.isfinite(c)) or c.min() < 0:
            raise DomainError("counts must be nonnegative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting_alice", "setting_bob", "count"])
        for (a, b), n in zip(self.settings.pairs, self.counts):
            w.writerow([a, b, int(n) if float(n).is_integer() else repr(float(n))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, duration: str | None = None) -> "TomoCounts":
        pairs, counts = [], []
        for row in csv.DictReader(io.StringIO(text)):
            try:
                pairs.append((row["setting_alice"].strip(), row["setting_bob"].strip()))
                counts.append(float(row["count"]))
            except (KeyError, ValueError, AttributeError):
                raise DomainError(f"malformed tomography row {row}") from None
        return cls(np.array(counts), TomoSettings(tuple(pairs)), duration)


def save_counts(counts: TomoCounts, path) -> None:
    Path(path).write_text(counts.to_csv())


def load_counts(path) -> TomoCounts:
    return TomoCounts.from_csv(Path(path).read_text())


def probabilities(rho, settings: TomoSettings = CANONICAL_SETTINGS) -> np.ndarray:
    m = as_density_matrix(rho).matrix
    return np.clip(np.real(np.einsum("kij,ji->k", settings.projectors(), m)), 0.0, None)


def simulate_counts(rho, settings: TomoSettings = CANONICAL_SETTINGS,
                    n_scale: float = 1e4, seed=None) -> TomoCounts:
    """Poisson counts with mean ``n_scale * Tr[(pa (x) pb) rho]`` per setting."""
    if not n_scale > 0:
        raise DomainError("n_scale must be positive")
    rng = np.random.default_rng(seed)
    return TomoCounts(rng.poisson(n_scale * probabilities(rho, settings)), settings)


# -- linear inversion ------------------------------------------------------------

def _pauli_design(settings: TomoSettings) -> np.ndarray:
    """``G[k, m] = Tr[P_k sigma_m] / 4`` for the 16 two-qubit Paulis."""
    paulis = [np.kron(a, b) for a in qmath.PAULIS for b in qmath.PAULIS]
    proj = settings.projectors()
    return np.real(np.array([[np.trace(p @ s) for s in paulis] for p in proj])) / 4


def _pauli_matrix(coeffs) -> np.ndarray:
    paulis = [np.kron(a, b) for a in qmath.PAULIS for b in qmath.PAULIS]
    return sum(c * s for c, s in zip(coeffs, paulis)) / 4


def linear_inversion(counts, settings: TomoSettings | None = None) -> np.ndarray:
    """Least-squares reconstruction; Hermitian, unit trace, maybe not PSD.

    ``counts`` may be a ``TomoCounts`` or any nonnegative vector of counts or
    (unnormalized) frequencies.
    """
    if isinstance(counts, TomoCounts):
        settings = settings or counts.settings
        counts = counts.counts
    settings = settings or CANONICAL_SETTINGS
    y = np.asarray(counts, dtype=float).reshape(-1)
    if y.shape != (len(settings),):
        raise DomainError(f"expected {len(settings)} values, got {y.size}")
    g = _pauli_design(settings)
    if np.linalg.matrix_rank(g) < 16:
        raise DomainError("tomography settings do not span the two-qubit operator space")
    # Unknowns are rate * Pauli coefficients; the identity coefficient is the rate.
    coeffs, *_ = np.linalg.lstsq(g, y, rcond=None)
    if not coeffs[0] > 0:
        raise DomainError("counts carry no signal; cannot normalize the reconstruction")
    return _pauli_matrix(coeffs / coeffs[0])


# -- maximum likelihood ------------------------------------------------------------

@dataclass(frozen=True)
class MLEConfig:
    """``zero_counts`` is ``"error"`` or ``"mixed"`` (return I/4)."""

    gtol: float = 1e-6
    max_evals: int = 100_000
    zero_counts: str = "error"
    start_mixing: float = 1e-3


def _t_from_params(x: np.ndarray) -> np.ndarray:
    t = np.diag(x[:4]).astype(complex)
    for k, (i, j) in enumerate(_LOWER):
        t[i, j] = x[4 + 2 * k] + 1j * x[5 + 2 * k]
    return t


def _params_from_t(t: np.ndarray) -> np.ndarray:
    x = np.zeros(16)
    x[:4] = np.real(np.diag(t))
    for k, (i, j) in enumerate(_LOWER):
        x[4 + 2 * k] = t[i, j].real
        x[5 + 2 * k] = t[i, j].imag
    return x


def _grad_params(g: np.ndarray) -> np.ndarray:
    """Real-parameter gradient from ``d f / d T*`` (times two)."""
    x = np.zeros(16)
    x[:4] = 2 * np.real(np.diag(g))
    for k, (i, j) in enumerate(_LOWER):
        x[4 + 2 * k] = 2 * g[i, j].real
        x[5 + 2 * k] = 2 * g[i, j].imag
    return x


def rho_from_params(x) -> np.ndarray:
    t = _t_from_params(np.asarray(x, dtype=float))
    m = t.conj().T @ t
    return m / np.real(np.trace(m))


def params_from_rho(rho) -> np.ndarray:
    """Lower-triangular ``T`` with ``T^dagger T = rho`` (rho must be full rank)."""
    m = np.asarray(rho, dtype=complex)
    low = np.linalg.cholesky(_J @ m @ _J)
    t = (_J @ low @ _J).conj().T
    # Diagonal of a Cholesky factor is real positive; keep it exactly real.
    return _params_from_t(t)


def poisson_log_likelihood(rho, counts: TomoCounts) -> float:
    """Poisson log-likelihood with the count rate set to its optimum."""
    p = probabilities(rho, counts.settings)
    c = counts.counts.astype(float)
    rate = c.sum() / p.sum()
    mu = rate * p
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(c > 0, c * np.log(mu), 0.0)
    return float(np.sum(terms - mu - gammaln(c + 1)))


def _objective(x, proj, c, total, s_op):
    t = _t_from_params(x)
    rho_u = t.conj().T @ t
    g = np.real(np.einsum("kij,ji->k", proj, rho_u))
    g_s = np.real(np.trace(s_op @ rho_u))
    mask = c > 0
    if np.any(g[mask] <= 0) or g_s <= 0:
        return np.inf, np.zeros_like(x)
    f = -np.sum(c[mask] * np.log(g[mask])) + total * np.log(g_s)
    weights = np.zeros_like(c)
    weights[mask] = c[mask] / g[mask]
    g_op = np.einsum("k,kij->ij", weights, proj)
    grad_t = -t @ g_op + (total / g_s) * t @ s_op
    # Per-count scaling keeps the gradient test independent of the flux.
    return f / total, _grad_params(grad_t) / total


def mle_reconstruct(counts: TomoCounts, settings: TomoSettings | None = None,
                    config: MLEConfig | None = None) -> DensityMatrix:
    """Maximum-likelihood density matrix for Poisson-distributed counts."""
    config = config or MLEConfig()
    if not isinstance(counts, TomoCounts):
        counts = TomoCounts(counts, settings or CANONICAL_SETTINGS)
    c = counts.counts.astype(float)
    total = c.sum()
    if total == 0:
        if config.zero_counts == "mixed":
            return maximally_mixed()
        raise DomainError("all tomography counts are zero")
    proj = counts.settings.projectors()
    s_op = proj.sum(axis=0)

    start_rho = project_to_density_matrix(linear_inversion(counts))
    eps = config.start_mixing
    start = (1 - eps) * start_rho.matrix + eps * qmath.I4 / 4
    x0 = params_from_rho(start)

    res = minimize(_objective, x0, args=(proj, c, total, s_op), jac=True,
                   method="L-BFGS-B",
                   options={"gtol": config.gtol, "maxfun": config.max_evals,
                            "maxiter": config.max_evals, "ftol": 1e-15})
    best = DensityMatrix(rho_from_params(res.x))
    grad_norm = float(np.linalg.norm(res.jac)) if res.jac is not None else math.inf
    if poisson_log_likelihood(best, counts) < poisson_log_likelihood(start_rho, counts):
        best = start_rho
    if not (res.success or grad_norm < config.gtol):
        if res.nfev >= config.max_evals:
            raise ConvergenceError(
                f"MLE stopped after {res.nfev} evaluations (gradient norm {grad_norm:.2e})",
                best=best)
        # Line-search stalls at machine precision still leave a valid optimum
        # unless the gradient is far from zero.
        if grad_norm > math.sqrt(config.gtol):
            raise ConvergenceError(f"MLE did not converge: {res.message}", best=best)
    return best


# -- bootstrap -------------------------------------------------------------

@dataclass
class BootstrapResult:
    fidelity_mean: float
    fidelity_std: float
    tangle_mean: float
    tangle_std: float
    fidelities: np.ndarray = field(repr=False)
    tangles: np.ndarray = field(repr=False)

    def to_json_obj(self) -> dict:
        return {
            "runs": int(self.fidelities.size),
            "fidelity": {"mean": self.fidelity_mean, "std": self.fidelity_std},
            "tangle": {"mean": self.tangle_mean, "std": self.tangle_std},
        }


def _bootstrap_run(args):
    index, counts, rng_seed, target, config = args
    rng = np.random.default_rng(rng_seed)
    resampled = TomoCounts(rng.poisson(counts.counts), counts.settings, counts.duration)
    try:
        rho = mle_reconstruct(resampled, config=config)
    except (ConvergenceError, DomainError) as exc:
        raise type(exc)(f"bootstrap run {index}: {exc}") from exc
    return fidelity_with_pure(rho, target), tangle(rho)


def bootstrap_errors(counts: TomoCounts, settings: TomoSettings | None = None,
                     runs: int = 200, seed=None, target=PHI_PLUS_KET,
                     seeds: Sequence | None = None, config: MLEConfig | None = None,
                     workers: int = 1) -> BootstrapResult:
    """Fidelity and tangle spread under Poisson resampling of the counts.

    Each run redraws every count as ``Poisson(observed)``, reconstructs by
    maximum likelihood and evaluates the metrics.  Run ``i`` uses child
    ``i`` of ``SeedSequence(seed)`` unless explicit per-run ``seeds`` are
    given.
    """
    if not isinstance(counts, TomoCounts):
        counts = TomoCounts(counts, settings or CANONICAL_SETTINGS)
    if seeds is not None:
        seeds = list(seeds)
        runs = len(seeds)
    if runs < 2:
        raise DomainError("bootstrap needs at least two runs")
    if seeds is None:
        seeds = np.random.SeedSequence(seed).spawn(runs)
    jobs = [(i, counts, s, target, config) for i, s in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_bootstrap_run, jobs))
    else:
        out = [_bootstrap_run(job) for job in jobs]
    fid = np.array([f for f, _ in out])
    tau = np.array([t for _, t in out])
    return BootstrapResult(float(fid.mean()), float(fid.std(ddof=1)),
                           float(tau.mean()), float(tau.std(ddof=1)), fid, tau)


def reconstruction_report(rho, target=PHI_PLUS_KET, bootstrap: BootstrapResult | None = None,
                          linear=None) -> dict:
    m = metrics(rho, target)
    report = {
        "matrix": to_json_obj(rho),
        "metrics": {"fidelity": m.fidelity, "tangle": m.tangle, "purity": m.purity},
    }
    if linear is not None:
        report["linear_inversion_min_eigenvalue"] = float(
            qmath.eig_hermitian(linear)[0][-1])
    if bootstrap is not None:
        report["errors"] = bootstrap.to_json_obj()
    return report


def save_report(report: dict, path) -> None:
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
