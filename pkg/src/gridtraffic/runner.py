"""Replicate orchestration: seeded runs, optional process-level parallelism.

Each replicate derives its own RNG stream from the master seed and the
replicate index, so a batch gives identical results whether it runs
sequentially or across processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from typing import Callable

from .core import SimConfig, SimState, new_simulation
from .engine import step_network
from .metrics import RunRecorder, RunSummary, summarize_run
from .network import GridNetwork, build_grid


def config_echo(config: SimConfig, **extra) -> dict:
    """Flat, CSV-friendly view of a configuration."""
    echo: dict = {"behavior": type(config.behavior).__name__}
    echo.update(asdict(config.behavior))
    for name in ("v_max", "p_slow", "p_new", "max_vehicles", "warmup_steps",
                 "approach_window", "entry_streets_per_step", "seed"):
        echo[name] = getattr(config, name)
    echo.update(extra)
    return echo


def run_replicate(
    config: SimConfig,
    total_steps: int,
    *,
    network: GridNetwork | None = None,
    replicate: int = 0,
    emit_series: bool = False,
    emit_meetings: bool = False,
    check_invariants: bool = False,
    on_step: Callable[[SimState], None] | None = None,
) -> RunSummary:
    """Run one replicate for ``total_steps`` steps and summarize it.

    Steps at and past ``warmup_steps`` are recorded, so the summary covers
    ``total_steps - warmup_steps`` steps.
    """
    if network is None:
        network = build_grid()
    state = new_simulation(network, config, replicate)
    recorder = RunRecorder(keep_series=emit_series, keep_meetings=emit_meetings)
    state.recorder = recorder
    for _ in range(total_steps):
        step_network(state, check_invariants=check_invariants)
        if on_step is not None:
            on_step(state)
    return summarize_run(recorder, config_echo(config, replicate=replicate,
                                               total_steps=total_steps))


def _replicate_job(args) -> RunSummary:
    config, total_steps, replicate, emit_series, emit_meetings, check = args
    return run_replicate(config, total_steps, replicate=replicate,
                         emit_series=emit_series, emit_meetings=emit_meetings,
                         check_invariants=check)


def run_batch(
    config: SimConfig,
    total_steps: int,
    replicates: int,
    *,
    jobs: int = 1,
    emit_series: bool = False,
    emit_meetings: bool = False,
    check_invariants: bool = False,
) -> list[RunSummary]:
    """Run ``replicates`` independent replicates, optionally in parallel.

    Results are ordered by replicate index and identical for any ``jobs``.
    """
    if replicates < 1:
        raise ValueError("need at least one replicate")
    args = [(config, total_steps, r, emit_series, emit_meetings, check_invariants)
            for r in range(replicates)]
    if jobs <= 1 or replicates == 1:
        return [_replicate_job(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_replicate_job, args))
