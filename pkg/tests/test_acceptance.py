"""Acceptance gate: one test per criterion, summarized at the end of the run.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary prints
one ``[PASS]``/``[FAIL]`` line per criterion.
"""

import csv
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from eacode import tomography as tomo
from eacode.channel import butterfly_channel, empirical_table, inquisition, make_rng, sample_outputs
from eacode.classical_code import best_deterministic_code, exhaustive_success_table
from eacode.cli import main
from eacode.montecarlo import estimate_success, pockels_identity_error, run_trials
from eacode.optimizer import SeesawConfig, multistart, seesaw
from eacode.protocol import (
    box_success,
    chsh_strategy,
    correlation_omega,
    exact_success,
    pr_box,
)
from eacode.states import fidelity, phi_plus, werner

SUCCESS = (2 + 2 ** -0.5) / 3
OMEGA = (1 + 2 ** -0.5) / 2
P_STAR = 2 ** -0.5


def test_criterion_1_classical_optimum(capsys):
    start = time.perf_counter()
    assert main(["classical-opt", "--json"]) == 0
    obj = json.loads(capsys.readouterr().out)
    _, value = best_deterministic_code(butterfly_channel(), 2)
    table = exhaustive_success_table(butterfly_channel(), 2)
    elapsed = time.perf_counter() - start
    assert obj["success_exact"] == "5/6"
    assert value == Fraction(5, 6)
    assert table.shape == (16, 64)
    assert table.max() <= 5 / 6 + 1e-15
    assert elapsed < 1.0


def test_criterion_2_entangled_value(capsys):
    start = time.perf_counter()
    assert main(["exact", "--state", "phi-plus", "--strategy", "chsh",
                 "--channel", "butterfly", "--json"]) == 0
    elapsed = time.perf_counter() - start
    value = json.loads(capsys.readouterr().out)["success"]
    assert abs(value - SUCCESS) <= 1e-12
    assert elapsed < 1.0


def test_criterion_3_relation_probability():
    stats = correlation_omega(phi_plus(), chsh_strategy())
    for q in (0, 1):
        for v in (0, 1):
            assert abs(stats[q, v] - OMEGA) <= 1e-12


def test_criterion_4_pr_box_certainty():
    assert box_success(pr_box(), butterfly_channel()) == 1


@pytest.mark.parametrize("p", [0.0, 0.3, P_STAR, 1.0])
def test_criterion_5_decomposition_identity(p):
    rho = werner(p)
    omega = correlation_omega(rho, chsh_strategy()).mean
    value = exact_success(rho, chsh_strategy(), butterfly_channel())
    assert abs(value - (omega + (1 - omega) / 3)) <= 1e-12


def test_criterion_6_monte_carlo_agreement(tmp_path, capsys):
    n = 10**6
    start = time.perf_counter()
    ch = butterfly_channel()
    bound = 3 * math.sqrt(SUCCESS * (1 - SUCCESS) / n)
    est = {}
    for backend, seed in (("direct", 2024), ("physical", 2025)):
        est[backend] = estimate_success(
            run_trials(phi_plus(), chsh_strategy(), ch, n, seed, backend))
        assert abs(est[backend][0] - SUCCESS) <= bound
    (p_d, s_d), (p_p, s_p) = est["direct"], est["physical"]
    assert abs(p_d - p_p) <= 3 * math.hypot(s_d, s_p)
    for backend in ("direct", "physical"):
        files = []
        for rep in ("a", "b"):
            out = tmp_path / f"{backend}_{rep}"
            assert main(["simulate", "--n", str(n), "--seed", "7", "--backend", backend,
                         "--out", str(out)]) == 0
            files.append((out / "counts.csv").read_bytes())
        assert files[0] == files[1]
    capsys.readouterr()
    assert time.perf_counter() - start < 30.0


def test_criterion_7_crossover(tmp_path, capsys):
    assert main(["sweep", "--werner", "0:1:101", "--n", "0", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    grid = [(float(r["p"]), float(r["exact"])) for r in rows]
    grid.append((P_STAR, exact_success(werner(P_STAR), chsh_strategy(), butterfly_channel())))
    assert len(grid) == 102
    for p, value in grid:
        oracle = (2 + p * 2 ** -0.5) / 3
        assert abs(value - oracle) <= 1e-9
        assert (value >= 5 / 6 - 1e-9) == (p >= P_STAR - 1e-9)


@pytest.mark.parametrize("t", ["2", "P"])
@pytest.mark.parametrize("b", [0, 1])
def test_criterion_8_pockels_identity(t, b):
    assert pockels_identity_error(chsh_strategy(), t, b) <= 1e-12


def test_criterion_9_seesaw():
    ch = butterfly_channel()
    strat = chsh_strategy()
    values = []
    for _ in range(10):
        result = seesaw(phi_plus(), ch, SeesawConfig(max_iters=1, init=strat))
        strat = result.strategy
        values.extend(result.trace)
    assert max(values) - min(values) < 1e-9

    results = multistart(phi_plus(), ch, range(100), max_iters=50)
    assert all(np.all(np.diff(r.trace) >= -1e-10) for r in results)
    reached = sum(r.final_objective >= 5 / 6 for r in results)
    assert reached >= 90


def test_criterion_10_tomography_round_trip():
    start = time.perf_counter()
    truth = werner(0.95)
    counts = tomo.simulate_counts(truth, n_scale=1e4, seed=2024)
    rho = tomo.mle_reconstruct(counts)
    assert fidelity(rho, truth) >= 0.99

    low = tomo.bootstrap_errors(counts, runs=200, seed=1)
    high = tomo.bootstrap_errors(tomo.simulate_counts(truth, n_scale=1e6, seed=2024),
                                 runs=200, seed=1)
    assert high.fidelity_std < low.fidelity_std
    assert high.tangle_std < low.tangle_std
    assert time.perf_counter() - start < 120.0


def test_criterion_11_inquisition():
    ch = butterfly_channel()
    assert inquisition(ch.probs, ch.probs) == 1
    rng = make_rng(11)
    xs = rng.integers(0, 4, size=10**6)
    ys = sample_outputs(ch, xs, rng)
    table = empirical_table(np.stack([xs, ys], axis=1), 4, 6)
    assert inquisition(table, ch.probs) >= 0.999
