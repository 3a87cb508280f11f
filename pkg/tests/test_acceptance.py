"""Acceptance gate: release-blocking behavior checks at desk scale.

Each test prints one PASS/FAIL line. Heavy batches (the imitation and
impatience sweeps) are shared session fixtures so the suite stays in the
minutes range.
"""

from __future__ import annotations

import itertools
import math
import random
import time

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import spearmanr, t as student_t

from gridtraffic import (
    SimConfig,
    build_grid,
    new_simulation,
    run_batch,
    run_replicate,
    step_network,
)
from gridtraffic.behavior import (
    FixedRatio,
    Imitation,
    Impatience,
    weibull_cdf,
    weibull_hazard,
)
from gridtraffic.cli import main as cli_main
from gridtraffic.estimation import ObservationBatch, harvest_observations, minimax_estimate
from conftest import make_state, place_vehicle
from oracles import nasch_open_road

JOBS = 2


def report(number: int, description: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number} {status}: {description} {detail}".rstrip())
    assert ok, f"acceptance {number} failed: {description} {detail}"


# -- 1: exact single-street equivalence with the brute-force update rule --------


def test_a1_single_street_oracle_exact(default_network):
    rng = random.Random(20240817)
    steps = 1000
    elapsed = 0.0
    for case in range(20):
        n_cars = rng.randint(1, 10)
        cells = sorted(rng.sample(range(50), n_cars))
        cars = [(cell, rng.randint(0, 1)) for cell in cells]
        t0 = time.perf_counter()
        expected = nasch_open_road(cars, length=50, v_max=1, steps=steps)
        state = make_state(default_network, max_vehicles=n_cars)
        for cell, speed in cars:
            place_vehicle(state, street=0, cell=cell, speed=speed)
        got = []
        for _ in range(steps):
            step_network(state)
            got.append(tuple(sorted((v.cell, v.speed) for v in state.on_lattice())))
        elapsed += time.perf_counter() - t0
        assert got == expected, f"trajectory diverged for start {cars}"
    report(1, "single-street trajectories match the brute-force rule exactly",
           elapsed < 1.0, f"(20 x {steps} steps in {elapsed:.2f}s)")


# -- 2: occupancy and conservation over long runs of every model -----------------


def test_a2_occupancy_and_conservation():
    behaviors = {
        "fixed-ratio": FixedRatio(p_co=0.75),
        "imitation": Imitation(initial_p_de=0.5, core_fraction=0.1, tau=500),
        "impatience": Impatience(),
    }
    steps = 10_000
    network = build_grid()
    t0 = time.perf_counter()
    for name, behavior in behaviors.items():
        config = SimConfig(behavior=behavior, p_new=0.5, seed=424242)
        state = new_simulation(network, config)
        for _ in range(steps):
            step_network(state, check_invariants=True)  # raises on any violation
        population = state.n_on_lattice() + len(state.queue)
        assert population == config.max_vehicles, name
    elapsed = time.perf_counter() - t0
    report(2, "no occupancy violations, population conserved exactly",
           elapsed < 30.0, f"(3 models x {steps} steps in {elapsed:.1f}s)")


# -- 3: cooperators drive faster than defectors ----------------------------------


def test_a3_cooperator_speed_advantage():
    replicates = 100
    recorded = 2000
    details = []
    for p_de in (0.25, 0.5, 0.75):
        config = SimConfig(behavior=FixedRatio(p_co=1.0 - p_de), p_new=0.3,
                           max_vehicles=350, seed=1001)
        summaries = run_batch(config, recorded + config.warmup_steps,
                              replicates, jobs=JOBS)
        diffs = np.array([s.mean_speed_co - s.mean_speed_de for s in summaries])
        lower = diffs.mean() - student_t.ppf(0.95, len(diffs) - 1) * diffs.std(ddof=1) / math.sqrt(len(diffs))
        details.append(f"p_de={p_de}: diff={diffs.mean():.4f} lower95={lower:.4f}")
        assert lower >= 0.0, details[-1]
    report(3, "mean CO speed exceeds mean DE speed (one-sided 95%)",
           True, "; ".join(details))


# -- 4 and 5: imitation stabilization and the effect of the core -----------------

IMITATION_CASES = list(itertools.product((0.0, 0.1, 0.3), (0.25, 0.5, 0.75)))
IMITATION_SEEDS = 20
IMITATION_TAU = 50
IMITATION_CYCLES = 200


@pytest.fixture(scope="session")
def imitation_batch():
    """q-series per (core_fraction, initial_p_de) case over 20 seeds."""
    series = {}
    for core, p_de in IMITATION_CASES:
        config = SimConfig(
            behavior=Imitation(initial_p_de=p_de, core_fraction=core,
                               tau=IMITATION_TAU),
            p_new=0.6, max_vehicles=120, seed=1234)
        summaries = run_batch(config, IMITATION_CYCLES * IMITATION_TAU,
                              IMITATION_SEEDS, jobs=JOBS)
        series[(core, p_de)] = [np.asarray(s.q_samples) for s in summaries]
    return series


def test_a4_imitation_stabilizes(imitation_batch):
    window = 100
    details = []
    for (core, p_de), runs in imitation_batch.items():
        assert all(len(q) == IMITATION_CYCLES for q in runs)
        averaged = np.mean([q[-window:] for q in runs], axis=0)
        slope = np.polyfit(np.arange(window), averaged, 1)[0]
        details.append(f"core={core},p0={p_de}: slope={slope:+.2e}")
        assert abs(slope) < 5e-4, details[-1]
    report(4, "defector share stabilizes (|trend| < 5e-4 per cycle, seed-averaged)",
           True, "; ".join(details[:3]) + " ...")


def test_a5_larger_core_stabilizes_lower(imitation_batch):
    window = 100
    tails = {core: [float(np.mean(q[-window:]))
                    for q in imitation_batch[(core, 0.75)]]
             for core in (0.0, 0.1, 0.3)}
    ok = sum(tails[0.3][i] < tails[0.1][i] < tails[0.0][i]
             for i in range(IMITATION_SEEDS))
    share = ok / IMITATION_SEEDS
    report(5, "stabilized q orders core30 < core10 < core0 at initial p_de 0.75",
           share >= 0.9,
           f"(ordering holds in {ok}/{IMITATION_SEEDS} seeds; means "
           f"{np.mean(tails[0.3]):.3f} < {np.mean(tails[0.1]):.3f} < {np.mean(tails[0.0]):.3f})")


# -- 6: impatience sweep reproduces the congestion-transition trends -------------

IMPATIENCE_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@pytest.fixture(scope="session")
def impatience_batch():
    recorded = 10_000
    seeds = 10
    freqs, waits = {}, {}
    for p_new in IMPATIENCE_GRID:
        config = SimConfig(behavior=Impatience(), p_new=p_new, seed=2002)
        summaries = run_batch(config, recorded + config.warmup_steps, seeds,
                              jobs=JOBS)
        freqs[p_new] = float(np.mean([s.change_freq for s in summaries]))
        waits[p_new] = float(np.mean([s.avg_wait for s in summaries
                                      if s.avg_wait is not None]))
    return freqs, waits


def test_a6_impatience_transition(impatience_batch):
    freqs, waits = impatience_batch
    freq_series = [freqs[p] for p in IMPATIENCE_GRID]
    rho = spearmanr(IMPATIENCE_GRID, freq_series).statistic
    assert rho > 0.9, f"Spearman rho {rho:.3f}"
    assert waits[0.9] > waits[0.1], f"waits: {waits[0.1]:.2f} vs {waits[0.9]:.2f}"
    assert freqs[0.3] < 0.05, f"freq(0.3) = {freqs[0.3]:.4f}"
    assert freqs[0.5] > 0.1, f"freq(0.5) = {freqs[0.5]:.4f}"
    report(6, "type-change frequency rises monotonically with the sharp onset "
              "between 0.3 and 0.5",
           True,
           f"(rho={rho:.3f}, freq(0.3)={freqs[0.3]:.4f}, freq(0.5)={freqs[0.5]:.3f}, "
           f"wait {waits[0.1]:.2f} -> {waits[0.9]:.2f})")


# -- 7: waiting-threshold distribution identities ---------------------------------


def test_a7_weibull_identities():
    params = Impatience()  # scale 30, shape 2.92
    worst = 0.0
    for x in np.geomspace(0.01, 200.0, 60):
        integral, _ = integrate.quad(lambda u: weibull_hazard(u, params), 0.0, x)
        survival = 1.0 - weibull_cdf(x, params)
        rel = abs(survival - math.exp(-integral)) / survival
        worst = max(worst, rel)
    exact_at_scale = weibull_cdf(30.0, params) == 1.0 - math.exp(-1.0)
    report(7, "survival equals exp(-integrated hazard) to 1e-9; F(30) exact",
           worst < 1e-9 and exact_at_scale, f"(worst rel err {worst:.2e})")


# -- 8: estimator suite ------------------------------------------------------------


def test_a8_estimator_suite():
    # constant squared-error risk across the parameter range, m = 16 trials
    rng = np.random.default_rng(99)
    m, trials = 16, 100_000
    theoretical = (math.sqrt(m) / (2 * (m + math.sqrt(m)))) ** 2
    for p in np.linspace(0.0, 1.0, 11):
        x = rng.binomial(m, p, size=trials)
        sq_err = ((math.sqrt(m) / 2 + x) / (math.sqrt(m) + m) - p) ** 2
        se = sq_err.std(ddof=1) / math.sqrt(trials)
        assert abs(sq_err.mean() - theoretical) <= 3 * se + 1e-12, f"risk varies at p={p}"

    # recover the generating cooperator probability from harvested meetings
    config = SimConfig(behavior=FixedRatio(p_co=0.75), p_new=0.6,
                       max_vehicles=350, seed=31415)
    n = sigma = 0
    replicate = 0
    while n < 10_000:
        batch = harvest_observations(
            run_replicate(config, 5000, replicate=replicate))
        n += batch.n
        sigma += batch.sigma_xi
        replicate += 1
    estimate = minimax_estimate(ObservationBatch(n=n, sigma_xi=sigma))
    report(8, "constant-risk property and harvest-then-estimate recovery",
           abs(estimate - 0.75) < 0.02,
           f"(risk flat; {n} meetings -> estimate {estimate:.4f})")


# -- 9: byte-identical reruns of every subcommand -----------------------------------


def test_a9_byte_identical_outputs(tmp_path):
    def run_all(out_dir, jobs):
        base = ["--steps", "120", "--replicates", "2", "--max-vehicles", "40",
                "--seed", "54321", "--jobs", str(jobs), "--out-dir", str(out_dir)]
        assert cli_main(["model1", *base, "--p-de", "0.5", "--p-new", "0.5",
                         "--emit-series", "--emit-meetings"]) == 0
        assert cli_main(["model2", *base, "--tau", "60", "--cycles", "4",
                         "--p-de", "0.5", "--core-fraction", "0.1",
                         "--p-new", "0.5"]) == 0
        assert cli_main(["model3", *base, "--p-new", "0.2,0.8"]) == 0
        assert cli_main(["estimate", "--meetings",
                         str(out_dir / "model1_meetings.csv"),
                         "--out-dir", str(out_dir)]) == 0
        assert cli_main(["snapshot", "--model", "1", "--steps", "80",
                         "--max-vehicles", "40", "--p-de", "0.5",
                         "--p-new", "0.8", "--seed", "54321",
                         "--out-dir", str(out_dir)]) == 0

    dirs = [tmp_path / name for name in ("run_a", "run_b", "run_parallel")]
    run_all(dirs[0], jobs=1)
    run_all(dirs[1], jobs=1)
    run_all(dirs[2], jobs=2)
    names = sorted(p.name for p in dirs[0].iterdir())
    assert names, "no outputs produced"
    for other in dirs[1:]:
        assert sorted(p.name for p in other.iterdir()) == names
        for name in names:
            assert (dirs[0] / name).read_bytes() == (other / name).read_bytes(), name
    report(9, "identical config and seed give byte-identical outputs, "
              "sequential and parallel", True, f"({len(names)} files compared)")
