"""Experiment runner CLI.

Subcommands ``model1``/``model2``/``model3`` sweep the respective behavior
model over its parameter grid and write CSV files; ``estimate`` turns a
meeting-log CSV into cooperator-probability estimates; ``snapshot`` prints
an ASCII picture of the lattice after a short run.

Settings resolve in three layers: built-in desk-scale defaults, then a flat
``key = value`` config file (``--config``), then command-line flags. Every
CSV starts with ``#``-prefixed lines echoing the settings that produced it;
identical settings and seed give byte-identical files, also under
``--jobs`` parallelism. Exit codes: 0 ok, 1 bad configuration, 2 runtime
invariant violation (``--check-invariants``).
"""

from __future__ import annotations

import argparse
import csv
import sys
from enum import Enum
from pathlib import Path

from .behavior import DriverType, FixedRatio, Imitation, Impatience
from .core import InvariantViolation, SimConfig, new_simulation
from .engine import step_network
from .estimation import ObservationBatch, bayes_estimate, minimax_estimate
from .games import PayoffTable
from .metrics import aggregate_replicates
from .network import ConfigurationError, build_grid
from .runner import run_batch, run_replicate
from .snapshot import render

DESK_DEFAULTS: dict = {
    "seed": 12345,
    "replicates": None,          # per-model default below
    "steps": None,               # per-model default below
    "p_new": None,
    "p_de": None,
    "core_fraction": (0.0, 0.1, 0.3),
    "tau": 500,
    "cycles": 200,
    "q_burn_in": 100,
    "p_slow": 0.1,
    "v_max": 1,
    "max_vehicles": 350,
    "warmup_steps": 50,
    "approach_window": 1,
    "entry_streets_per_step": 4,
    "collision_cost": 50,
    "conflict_cost": 3,
    "hazard_mode": "discrete_conditional",
    "scale_a": 30.0,
    "shape_b": 2.92,
    "street_length": 50,
    "crossing_positions": (9, 19, 29, 39),
    "payoff_co_co": None,
    "payoff_co_de": None,
    "payoff_de_co": None,
    "payoff_de_de": None,
    "out_dir": "out",
    "paper_scale": False,
    "emit_series": False,
    "emit_meetings": False,
    "snapshot_every": 0,
    "jobs": 1,
    "check_invariants": False,
    "prior_alpha": 1.0,
    "prior_beta": 1.0,
}

MODEL_DEFAULTS = {
    # (replicates, steps) at desk scale; paper-scale counterparts in run_*.
    "model1": {"replicates": 20, "steps": 2000,
               "p_de": (0.1, 0.25, 0.5, 0.75, 0.9), "p_new": (0.3, 0.6)},
    "model2": {"replicates": 1, "p_de": (0.25, 0.5, 0.75), "p_new": (0.5,)},
    "model3": {"replicates": 10, "steps": 10000,
               "p_new": (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)},
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_int_pair(text: str) -> tuple[int, int]:
    parts = _parse_int_list(text)
    if len(parts) != 2:
        raise ConfigurationError(f"expected a pair of integers, got {text!r}")
    return parts


_KEY_PARSERS = {
    "seed": int, "replicates": int, "steps": int, "tau": int, "cycles": int,
    "q_burn_in": int, "v_max": int, "max_vehicles": int, "warmup_steps": int,
    "approach_window": int, "entry_streets_per_step": int,
    "collision_cost": int, "conflict_cost": int,
    "street_length": int, "snapshot_every": int, "jobs": int,
    "p_slow": float, "scale_a": float, "shape_b": float,
    "prior_alpha": float, "prior_beta": float,
    "p_new": _parse_float_list, "p_de": _parse_float_list,
    "core_fraction": _parse_float_list,
    "crossing_positions": _parse_int_list,
    "payoff_co_co": _parse_int_pair, "payoff_co_de": _parse_int_pair,
    "payoff_de_co": _parse_int_pair, "payoff_de_de": _parse_int_pair,
    "hazard_mode": str, "out_dir": str,
    "paper_scale": _parse_bool, "emit_series": _parse_bool,
    "emit_meetings": _parse_bool, "check_invariants": _parse_bool,
}


def parse_config_file(path: str | Path) -> dict:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    settings: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_PARSERS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            settings[key] = _KEY_PARSERS[key](value)
        except (ValueError, ConfigurationError) as exc:
            raise ConfigurationError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return settings


def resolve_settings(args: argparse.Namespace, model_key: str | None) -> dict:
    settings = dict(DESK_DEFAULTS)
    if model_key is not None:
        settings.update(MODEL_DEFAULTS[model_key])
    if getattr(args, "config", None):
        file_settings = parse_config_file(args.config)
        settings.update(file_settings)
    for key in DESK_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def build_payoffs(settings: dict, model: str) -> PayoffTable:
    keys = ("payoff_co_co", "payoff_co_de", "payoff_de_co", "payoff_de_de")
    given = [settings[k] for k in keys]
    if any(v is not None for v in given):
        if any(v is None for v in given):
            raise ConfigurationError("payoff override needs all four payoff_* pairs")
        entries = {
            (DriverType.CO, DriverType.CO): given[0],
            (DriverType.CO, DriverType.DE): given[1],
            (DriverType.DE, DriverType.CO): given[2],
            (DriverType.DE, DriverType.DE): given[3],
        }
        return PayoffTable(entries=entries, crossing_inclusive=(model != "model3"))
    if model == "model3":
        return PayoffTable.impatience_default()
    return PayoffTable.fixed_ratio_default(conflict_cost=settings["conflict_cost"],
                                           collision_cost=settings["collision_cost"])


def make_sim_config(settings: dict, behavior, payoffs: PayoffTable) -> SimConfig:
    return SimConfig(
        behavior=behavior,
        payoffs=payoffs,
        v_max=settings["v_max"],
        p_slow=settings["p_slow"],
        p_new=settings["_p_new_scalar"],
        max_vehicles=settings["max_vehicles"],
        warmup_steps=settings["warmup_steps"],
        approach_window=settings["approach_window"],
        entry_streets_per_step=settings["entry_streets_per_step"],
        seed=settings["seed"],
    )


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, comments: dict, fieldnames: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        for key, value in comments.items():
            handle.write(f"# {key} = {_format_cell(value)}\n")
        writer = csv.writer(handle)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_format_cell(cell) for cell in row])


_VOLATILE_KEYS = {"out_dir", "jobs"}  # do not affect results; keep echoes stable


def _comment_block(settings: dict, **extra) -> dict:
    block = {k: v for k, v in sorted(settings.items())
             if not k.startswith("_") and v is not None and k not in _VOLATILE_KEYS}
    block.update(extra)
    return block


def _run_cases(settings: dict, make_behavior, cases: list[dict], total_steps: int,
               model: str):
    """Run one replicate batch per case; yields (case, summaries, aggregate)."""
    network = build_grid(settings["street_length"], settings["crossing_positions"])
    payoffs = build_payoffs(settings, model)
    for case in cases:
        settings["_p_new_scalar"] = case["p_new"]
        config = make_sim_config(settings, make_behavior(case), payoffs)
        snapshot_every = settings["snapshot_every"]
        if snapshot_every > 0:
            summaries = []
            for rep in range(settings["replicates"]):
                sink = _snapshot_sink(settings, model, case, snapshot_every) if rep == 0 else None
                summaries.append(run_replicate(
                    config, total_steps, network=network, replicate=rep,
                    emit_series=settings["emit_series"],
                    emit_meetings=settings["emit_meetings"],
                    check_invariants=settings["check_invariants"],
                    on_step=sink))
        else:
            summaries = run_batch(
                config, total_steps, settings["replicates"],
                jobs=settings["jobs"],
                emit_series=settings["emit_series"],
                emit_meetings=settings["emit_meetings"],
                check_invariants=settings["check_invariants"])
        yield case, summaries, aggregate_replicates(summaries, settings["q_burn_in"])


def _case_tag(case: dict) -> str:
    return "_".join(f"{k}{v}" for k, v in sorted(case.items()))


def _snapshot_sink(settings: dict, model: str, case: dict, every: int):
    out_dir = Path(settings["out_dir"])

    def sink(state) -> None:
        if state.step % every == 0:
            path = out_dir / f"{model}_{_case_tag(case)}_step{state.step:06d}.txt"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(render(state), encoding="utf-8")

    return sink


_SUMMARY_FIELDS = [
    "replicates", "steps_recorded", "mean_speed_all", "mean_speed_co",
    "mean_speed_de", "conflicts_total", "conflict_freq", "changes_total",
    "change_freq", "avg_ratio_de", "mean_wait_step", "avg_wait",
]


def _summary_row(agg) -> list:
    return [agg.n_replicates, agg.steps_recorded, agg.mean_speed_all,
            agg.mean_speed_co, agg.mean_speed_de, agg.conflicts_total,
            agg.conflict_freq, agg.changes_total, agg.change_freq,
            agg.avg_ratio_de, agg.mean_wait_step, agg.avg_wait]


def _write_series(out_dir: Path, name: str, comments: dict, case_fields: list[str],
                  entries: list) -> None:
    fields = case_fields + ["replicate", "step", "n_vehicles", "n_co", "n_de",
                            "mean_speed_all", "mean_speed_co", "mean_speed_de",
                            "ratio_q", "n_conflicts_step", "n_type_changes_step",
                            "mean_wait"]
    rows = []
    for case_values, replicate, series in entries:
        for sm in series:
            rows.append(list(case_values) + [replicate, sm.step, sm.n_vehicles,
                                             sm.n_co, sm.n_de, sm.mean_speed_all,
                                             sm.mean_speed_co, sm.mean_speed_de,
                                             sm.ratio_q, sm.n_conflicts_step,
                                             sm.n_type_changes_step, sm.mean_wait])
    write_csv(out_dir / name, comments, fields, rows)


def _write_meetings(out_dir: Path, name: str, comments: dict, case_fields: list[str],
                    entries: list) -> None:
    fields = case_fields + ["replicate", "step", "intersection_id", "left_type", "right_type"]
    rows = []
    for case_values, replicate, meetings in entries:
        for rec in meetings:
            rows.append(list(case_values) + [replicate, rec.step, rec.intersection_id,
                                             rec.left_type, rec.right_type])
    write_csv(out_dir / name, comments, fields, rows)


def run_model1(settings: dict) -> int:
    if settings["paper_scale"]:
        settings["replicates"] = 10000
    out_dir = Path(settings["out_dir"])
    total_steps = settings["steps"] + settings["warmup_steps"]
    cases = [{"p_de": p_de, "p_new": p_new}
             for p_de in settings["p_de"] for p_new in settings["p_new"]]
    comments = _comment_block(settings, model="model1")
    summary_rows, speed_rows, series_entries, meeting_entries = [], [], [], []
    for case, summaries, agg in _run_cases(
            settings, lambda c: FixedRatio(p_co=1.0 - c["p_de"]), cases,
            total_steps, "model1"):
        summary_rows.append([case["p_de"], case["p_new"]] + _summary_row(agg))
        for dtype, value in (("CO", agg.mean_speed_co), ("DE", agg.mean_speed_de),
                             ("all", agg.mean_speed_all)):
            speed_rows.append([case["p_de"], case["p_new"], dtype, value])
        case_values = (case["p_de"], case["p_new"])
        for rep, summary in enumerate(summaries):
            if summary.series is not None:
                series_entries.append((case_values, rep, summary.series))
            if summary.meetings is not None:
                meeting_entries.append((case_values, rep, summary.meetings))
    write_csv(out_dir / "model1_summary.csv", comments,
              ["p_de", "p_new"] + _SUMMARY_FIELDS, summary_rows)
    write_csv(out_dir / "model1_speeds.csv", comments,
              ["p_de", "p_new", "driver_type", "mean_speed"], speed_rows)
    if settings["emit_series"]:
        _write_series(out_dir, "model1_series.csv", comments, ["p_de", "p_new"],
                      series_entries)
    if settings["emit_meetings"]:
        _write_meetings(out_dir, "model1_meetings.csv", comments, ["p_de", "p_new"],
                        meeting_entries)
    return 0


def run_model2(settings: dict) -> int:
    if settings["paper_scale"]:
        settings["tau"], settings["cycles"] = 500, 200
    out_dir = Path(settings["out_dir"])
    # --steps (total) wins over the cycles x tau product when given
    if settings["steps"] is not None:
        total_steps = settings["steps"]
    else:
        total_steps = settings["cycles"] * settings["tau"]
    cases = [{"core": core, "p_de": p_de}
             for core in settings["core_fraction"] for p_de in settings["p_de"]]
    for case in cases:
        case["p_new"] = settings["p_new"][0]
    comments = _comment_block(settings, model="model2")
    summary_rows, series_rows, box_rows = [], [], []
    for case, summaries, agg in _run_cases(
            settings,
            lambda c: Imitation(initial_p_de=c["p_de"], core_fraction=c["core"],
                                tau=settings["tau"]),
            cases, total_steps, "model2"):
        summary_rows.append([case["core"], case["p_de"]] + _summary_row(agg))
        for rep, summary in enumerate(summaries):
            for cycle, q in enumerate(summary.q_samples):
                series_rows.append([case["core"], case["p_de"], rep, cycle, q])
        box = agg.q_box
        if box is not None:
            box_rows.append([case["core"], case["p_de"], box.min, box.q1,
                             box.median, box.q3, box.max, box.n])
    write_csv(out_dir / "model2_summary.csv", comments,
              ["core_fraction", "initial_p_de"] + _SUMMARY_FIELDS, summary_rows)
    write_csv(out_dir / "model2_series.csv", comments,
              ["core_fraction", "initial_p_de", "replicate", "cycle", "ratio_q"],
              series_rows)
    write_csv(out_dir / "model2_box.csv", comments,
              ["core_fraction", "initial_p_de", "min", "q1", "median", "q3", "max", "n"],
              box_rows)
    return 0


MODEL3_METRICS = [
    ("total_type_changes", "changes_total"),
    ("change_freq", "change_freq"),
    ("total_conflicts", "conflicts_total"),
    ("conflict_freq", "conflict_freq"),
    ("avg_ratio_de", "avg_ratio_de"),
    ("avg_wait", "avg_wait"),
    ("mean_speed_all", "mean_speed_all"),
]


def run_model3(settings: dict) -> int:
    if settings["paper_scale"]:
        settings["steps"], settings["replicates"] = 75000, 1
    out_dir = Path(settings["out_dir"])
    total_steps = settings["steps"] + settings["warmup_steps"]
    cases = [{"p_new": p_new} for p_new in settings["p_new"]]
    comments = _comment_block(settings, model="model3")
    behavior = Impatience(scale_a=settings["scale_a"], shape_b=settings["shape_b"],
                          hazard_mode=settings["hazard_mode"])
    aggregates, box_rows = [], []
    for case, summaries, agg in _run_cases(settings, lambda c: behavior, cases,
                                           total_steps, "model3"):
        aggregates.append((case["p_new"], agg))
        box = agg.speed_box
        if box is not None:
            box_rows.append([case["p_new"], box.min, box.q1, box.median,
                             box.q3, box.max, box.n])
    # Table shape: one metric per row, one column per entry probability.
    p_news = [p for p, _ in aggregates]
    table_rows = []
    for label, attr in MODEL3_METRICS:
        table_rows.append([label] + [getattr(agg, attr) for _, agg in aggregates])
    write_csv(out_dir / "model3_table.csv", comments,
              ["metric"] + [repr(p) for p in p_news], table_rows)
    write_csv(out_dir / "model3_speed_box.csv", comments,
              ["p_new", "min", "q1", "median", "q3", "max", "n"], box_rows)
    return 0


def run_estimate(settings: dict, meetings_path: str) -> int:
    n = 0
    sigma = 0
    try:
        with open(meetings_path, newline="", encoding="utf-8") as handle:
            rows = csv.DictReader(line for line in handle if not line.startswith("#"))
            for row in rows:
                try:
                    left, right = row["left_type"], row["right_type"]
                except KeyError as exc:
                    raise ConfigurationError(
                        f"{meetings_path}: missing column {exc}") from exc
                n += 1
                sigma += (left == "CO") + (right == "CO")
    except OSError as exc:
        raise ConfigurationError(f"cannot read meeting log {meetings_path}: {exc}") from exc
    if n == 0:
        raise ConfigurationError(f"{meetings_path}: no meetings to estimate from")
    batch = ObservationBatch(n=n, sigma_xi=sigma)
    minimax = minimax_estimate(batch)
    bayes = bayes_estimate(batch, settings["prior_alpha"], settings["prior_beta"])
    print(f"meetings: {n}")
    print(f"sigma_xi: {sigma}")
    print(f"p_co_minimax: {minimax!r}")
    print(f"p_co_bayes: {bayes!r}")
    out_dir = Path(settings["out_dir"])
    write_csv(out_dir / "estimates.csv",
              {"meetings_file": meetings_path, "prior_alpha": settings["prior_alpha"],
               "prior_beta": settings["prior_beta"]},
              ["n_meetings", "sigma_xi", "p_co_minimax", "p_co_bayes"],
              [[n, sigma, minimax, bayes]])
    return 0


def run_snapshot(settings: dict, model: str, steps: int) -> int:
    payoffs = build_payoffs(settings, model)
    if model == "model3":
        behavior = Impatience(scale_a=settings["scale_a"], shape_b=settings["shape_b"],
                              hazard_mode=settings["hazard_mode"])
    elif model == "model2":
        behavior = Imitation(initial_p_de=settings["p_de"][0],
                             core_fraction=settings["core_fraction"][0],
                             tau=settings["tau"])
    else:
        behavior = FixedRatio(p_co=1.0 - settings["p_de"][0])
    settings["_p_new_scalar"] = settings["p_new"][0]
    config = make_sim_config(settings, behavior, payoffs)
    network = build_grid(settings["street_length"], settings["crossing_positions"])
    state = new_simulation(network, config)
    for _ in range(steps):
        step_network(state, check_invariants=settings["check_invariants"])
    text = render(state)
    sys.stdout.write(text)
    out_dir = Path(settings["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"snapshot_{model}_step{steps:06d}.txt").write_text(text, encoding="utf-8")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors map to config-error exit code
        raise ConfigurationError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--replicates", type=int)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--p-new", dest="p_new", type=_parse_float_list,
                        metavar="LIST", help="comma-separated entry probabilities")
    parser.add_argument("--p-de", dest="p_de", type=_parse_float_list, metavar="LIST",
                        help="comma-separated defector probabilities")
    parser.add_argument("--core-fraction", dest="core_fraction",
                        type=_parse_float_list, metavar="LIST")
    parser.add_argument("--tau", type=int)
    parser.add_argument("--cycles", type=int)
    parser.add_argument("--p-slow", dest="p_slow", type=float)
    parser.add_argument("--max-vehicles", dest="max_vehicles", type=int)
    parser.add_argument("--entry-streets", dest="entry_streets_per_step", type=int,
                        help="streets sampled for arrivals each step (1-8)")
    parser.add_argument("--collision-cost", dest="collision_cost", type=int)
    parser.add_argument("--conflict-cost", dest="conflict_cost", type=int)
    parser.add_argument("--hazard-mode", dest="hazard_mode",
                        choices=("discrete_conditional", "raw_clipped"))
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--paper-scale", dest="paper_scale", action="store_const",
                        const=True)
    parser.add_argument("--emit-series", dest="emit_series", action="store_const",
                        const=True)
    parser.add_argument("--emit-meetings", dest="emit_meetings", action="store_const",
                        const=True)
    parser.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--check-invariants", dest="check_invariants",
                        action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="traffic-sim",
                     description="Grid-traffic simulation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("model1", "fixed driver-type ratio sweeps"),
        ("model2", "imitation dynamics with a law-abiding core"),
        ("model3", "impatience-driven rule breaking"),
    ):
        sub_parser = sub.add_parser(name, help=help_text)
        _add_common_flags(sub_parser)
    est = sub.add_parser("estimate", help="estimate CO probability from a meeting log")
    _add_common_flags(est)
    est.add_argument("--meetings", required=True, help="meeting-log CSV path")
    est.add_argument("--prior-alpha", dest="prior_alpha", type=float)
    est.add_argument("--prior-beta", dest="prior_beta", type=float)
    snap = sub.add_parser("snapshot", help="render the lattice after a short run")
    _add_common_flags(snap)
    snap.add_argument("--model", choices=("1", "2", "3"), default="1")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        command = args.command
        if command in ("model1", "model2", "model3"):
            settings = resolve_settings(args, command)
            runner = {"model1": run_model1, "model2": run_model2,
                      "model3": run_model3}[command]
            return runner(settings)
        if command == "estimate":
            settings = resolve_settings(args, None)
            return run_estimate(settings, args.meetings)
        settings = resolve_settings(args, f"model{args.model}")
        steps = settings["steps"] if settings["steps"] is not None else 200
        return run_snapshot(settings, f"model{args.model}", steps)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
