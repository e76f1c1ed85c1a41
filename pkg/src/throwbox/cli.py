"""Experiment runner: seeded ensembles, parameter sweeps, result files.

Subcommands: sim, bnw, analytic, calibrate, trace, replay-figure1.
Config files are ``key = value`` lines; any key can be overridden by an
environment variable with the ``THROWBOX_`` prefix (upper-cased key), and
``--seed`` / ``--runs`` flags override both. Results are CSV by default
(``--json`` switches), a manifest.json describing the resolved inputs is
always written, and progress goes to standard error only.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .calibration import analytic_gb_fn, fit, write_overlay_csv, write_result_json
from .core import Constant, SimConfig, denominator, parse_config_text
from .dtn import run_worked_example, stabilization_time
from .ensemble import ensemble
from .formulas import FormulaParams, cumulative_degree, gb_analytic, gd_simplified
from .mobility import MobilityParams
from .bnw import (
    gb_timeseries,
    grow_preferential,
    project,
    threshold,
    write_projection_edges,
    write_thresholded_edges,
)
from . import traces as traces_mod

ENV_PREFIX = "THROWBOX_"

_SWEEP_AXES = (
    ("sweep_n_places", "n_places", int),
    ("sweep_mu", "mu", int),
    ("sweep_refresh_prob", "refresh_prob", float),
    ("sweep_randomness", "randomness", float),
    ("sweep_clustering_exp", "clustering_exp", float),
    ("sweep_threshold_v", "threshold_v", float),
)


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _read_raw_config(path: str) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    raw: dict[str, str] = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition("=")
        if not sep:
            raise ValueError(f"{path}: expected 'key = value', got {line!r}")
        raw[key.strip()] = value.strip()
    return raw


def _apply_env(raw: dict[str, str]) -> dict[str, str]:
    for name, value in sorted(os.environ.items()):
        if name.startswith(ENV_PREFIX):
            raw[name[len(ENV_PREFIX) :].lower()] = value
    return raw


def _parse_list(value: str, cast) -> list:
    return [cast(chunk.strip()) for chunk in value.split(",") if chunk.strip()]


def _resolved_config_text(raw: dict[str, str]) -> str:
    return "\n".join(f"{k} = {raw[k]}" for k in sorted(raw)) + "\n"


def _load(path: str, args, known_extras: set[str]) -> tuple[SimConfig, dict[str, str], str]:
    raw = _apply_env(_read_raw_config(path))
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    if args.runs is not None:
        raw["runs"] = str(args.runs)
    resolved = _resolved_config_text(raw)
    config, extras = parse_config_text(resolved)
    unknown = set(extras) - known_extras
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return config, extras, resolved


def _write_manifest(out_dir: str, subcommand: str, resolved_config: str, files: list[str]) -> None:
    payload = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "config_text": resolved_config,
        "output_files": sorted(os.path.basename(f) for f in files),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _write_rows(path: str, columns: list[str], rows: list[dict], as_json: bool) -> None:
    if as_json:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(col, "")) for col in columns) + "\n")


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _sweep_grid(extras: dict[str, str]) -> tuple[list[str], list[dict]]:
    axes: list[tuple[str, list]] = []
    for key, field, cast in _SWEEP_AXES:
        if key in extras:
            values = sorted(set(_parse_list(extras[key], cast)))
            if not values:
                raise ValueError(f"{key} lists no values")
            axes.append((field, values))
    if not axes:
        return [], [{}]
    names = [field for field, _ in axes]
    cells = [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in axes))]
    return names, cells


def _cell_config(config: SimConfig, cell: dict) -> SimConfig:
    updates = {}
    for field, value in cell.items():
        if field == "mu":
            updates["visits_per_agent"] = Constant(int(value))
            # the resolved overlap visit count tracks the swept mean
            updates["visits_per_step_overlap"] = None
        elif field == "threshold_v":
            continue
        else:
            updates[field] = value
    return replace(config, **updates) if updates else config


def _sim_cell_full(payload: tuple[SimConfig, dict, int]):
    config, cell, parallelism = payload
    try:
        result = ensemble(_cell_config(config, cell), parallelism=parallelism)
    except Exception as exc:  # per-cell failure must not kill the sweep
        return {**cell, "status": f"error: {exc}"}, None
    series = result.mean_series()
    row = {
        **cell,
        "runs": result.runs,
        "stabilized_place_coverage_mean": result.stabilized_mean(),
        "stabilized_place_coverage_sem": result.stabilized_sem(),
        "final_place_coverage_mean": float(np.mean(result.final_place_coverage)),
        "final_agent_coverage_mean": float(result.agent_mean[-1]),
        "stabilization_time": stabilization_time(series),
        "status": "ok",
    }
    return row, result


def _sim_cell(payload: tuple[SimConfig, dict, int]) -> dict:
    return _sim_cell_full(payload)[0]


def _run_cells(cells_payload: list, worker, parallelism: int, label: str) -> list[dict]:
    rows: list[dict] = []
    if parallelism > 1 and len(cells_payload) > 1:
        with ProcessPoolExecutor(max_workers=min(parallelism, len(cells_payload))) as pool:
            for i, row in enumerate(pool.map(worker, cells_payload), start=1):
                _progress(f"[{label} {i}/{len(cells_payload)}] done")
                rows.append(row)
        return rows
    for i, payload in enumerate(cells_payload, start=1):
        start = time.perf_counter()
        rows.append(worker(payload))
        _progress(f"[{label} {i}/{len(cells_payload)}] {time.perf_counter() - start:.1f}s")
    return rows


def _cmd_sim(args) -> int:
    config, extras, resolved = _load(args.config, args, {k for k, _, _ in _SWEEP_AXES})
    axis_names, cells = _sweep_grid(extras)
    os.makedirs(args.out, exist_ok=True)
    single_result = None
    if len(cells) == 1:
        row, single_result = _sim_cell_full((config, cells[0], args.parallelism))
        rows = [row]
    else:
        payloads = [(config, cell, 1) for cell in cells]
        rows = _run_cells(payloads, _sim_cell, args.parallelism, "cell")

    columns = axis_names + [
        "runs",
        "stabilized_place_coverage_mean",
        "stabilized_place_coverage_sem",
        "final_place_coverage_mean",
        "final_agent_coverage_mean",
        "stabilization_time",
        "status",
    ]
    ext = "json" if args.json else "csv"
    results_path = os.path.join(args.out, f"results.{ext}")
    _write_rows(results_path, columns, rows, args.json)
    files = [results_path]

    if single_result is not None:
        series_path = os.path.join(args.out, f"series.{ext}")
        (single_result.to_json if args.json else single_result.to_csv)(series_path)
        files.append(series_path)

    _write_manifest(args.out, "sim", resolved, files)
    return 0


def _bnw_cell(payload) -> dict:
    config, cell, base_v = payload
    try:
        v = float(cell.get("threshold_v", base_v))
        cfg = _cell_config(config, cell)
        sample_every = max(1, cfg.n_agents // 200)
        finals = []
        stabilized = []
        for r in range(cfg.runs):
            rng = np.random.default_rng(cfg.seed + r)
            _, gbs = gb_timeseries(
                cfg.n_places,
                cfg.visits_per_agent,
                v,
                cfg.n_agents,
                rng,
                params=MobilityParams(cfg.randomness, cfg.clustering_exp),
                sample_every=sample_every,
            )
            finals.append(gbs[-1])
            q = max(1, len(gbs) // 4)
            stabilized.append(float(np.mean(gbs[-q:])))
        stab = np.asarray(stabilized)
        sem = float(np.std(stab, ddof=1) / np.sqrt(len(stab))) if len(stab) > 1 else 0.0
        return {
            **cell,
            "threshold_v": v,
            "runs": cfg.runs,
            "gb_stabilized_mean": float(stab.mean()),
            "gb_stabilized_sem": sem,
            "gb_final_mean": float(np.mean(finals)),
            "status": "ok",
        }
    except Exception as exc:
        return {**cell, "status": f"error: {exc}"}


def _cmd_bnw(args) -> int:
    known = {k for k, _, _ in _SWEEP_AXES} | {"threshold_v"}
    config, extras, resolved = _load(args.config, args, known)
    base_v = float(extras.get("threshold_v", "0"))
    axis_names, cells = _sweep_grid(extras)
    os.makedirs(args.out, exist_ok=True)
    payloads = [(config, cell, base_v) for cell in cells]
    rows = _run_cells(payloads, _bnw_cell, args.parallelism, "cell")

    columns = [n for n in axis_names if n != "threshold_v"] + [
        "threshold_v",
        "runs",
        "gb_stabilized_mean",
        "gb_stabilized_sem",
        "gb_final_mean",
        "status",
    ]
    ext = "json" if args.json else "csv"
    results_path = os.path.join(args.out, f"results.{ext}")
    _write_rows(results_path, columns, rows, args.json)
    files = [results_path]

    if args.export_edges:
        rng = np.random.default_rng(config.seed)
        graph = grow_preferential(
            config.n_places,
            config.visits_per_agent,
            config.n_agents,
            rng,
            params=MobilityParams(config.randomness, config.clustering_exp),
        )
        proj = project(graph)
        tp = threshold(proj, base_v, graph.n_agents)
        proj_path = os.path.join(args.out, "projection_edges.txt")
        thr_path = os.path.join(args.out, "thresholded_edges.txt")
        write_projection_edges(proj, proj_path)
        write_thresholded_edges(tp, thr_path)
        files += [proj_path, thr_path]

    _write_manifest(args.out, "bnw", resolved, files)
    return 0


def _cmd_analytic(args) -> int:
    known = {
        "sweep_threshold_v",
        "sweep_k",
        "sweep_refresh_prob",
        "threshold_v",
        "k_const",
    }
    config, extras, resolved = _load(args.config, args, known)
    d = denominator(config.visits_per_agent)
    n = config.n_places
    os.makedirs(args.out, exist_ok=True)
    ext = "json" if args.json else "csv"
    results_path = os.path.join(args.out, f"results.{ext}")

    if args.quantity == "gb":
        vs = _parse_list(extras.get("sweep_threshold_v", ""), float)
        if not vs:
            raise ValueError("analytic gb sweep needs sweep_threshold_v in the config")
        rows = [
            {"v": v, "G_b": gb_analytic(FormulaParams(n, d, v))} for v in sorted(set(vs))
        ]
        _write_rows(results_path, ["v", "G_b"], rows, args.json)
    elif args.quantity == "cdf":
        if "sweep_k" in extras:
            ks = sorted(set(_parse_list(extras["sweep_k"], float)))
        else:
            ks = list(range(0, n - 1))
        v = float(extras.get("threshold_v", "0"))
        params = FormulaParams(n, d, v)
        rows = [{"k": k, "F_v": float(cumulative_degree(k, params))} for k in ks]
        _write_rows(results_path, ["k", "F_v"], rows, args.json)
    else:  # gd
        k_const = float(extras.get("k_const", "1"))
        if "sweep_refresh_prob" in extras:
            ps = sorted(set(_parse_list(extras["sweep_refresh_prob"], float)))
        else:
            ps = [round(p, 10) for p in np.linspace(0.01, 0.2, 9)]
        mean_mu = float(config.visits_per_agent.support[0]) if isinstance(
            config.visits_per_agent, Constant
        ) else None
        if mean_mu is None:
            raise ValueError("gd sweep needs a constant visit count (mu)")
        rows = [
            {"p": p, "G_d": gd_simplified(p, n, mean_mu, k_const)} for p in ps
        ]
        _write_rows(results_path, ["p", "G_d"], rows, args.json)

    _write_manifest(args.out, "analytic", resolved, [results_path])
    return 0


def _calib_cell(payload) -> dict:
    config, cell, _ = payload
    row = _sim_cell((config, cell, 1))
    return row


def _cmd_calibrate(args) -> int:
    known = {"sweep_refresh_prob"}
    config, extras, resolved = _load(args.config, args, known)
    if "sweep_refresh_prob" in extras:
        ps = sorted(set(_parse_list(extras["sweep_refresh_prob"], float)))
    else:
        ps = [round(float(p), 10) for p in np.linspace(0.01, 0.2, 9)]
    os.makedirs(args.out, exist_ok=True)

    payloads = [(config, {"refresh_prob": p}, None) for p in ps]
    rows = _run_cells(payloads, _calib_cell, args.parallelism, "p")
    bad = [r for r in rows if r["status"] != "ok"]
    if bad:
        for r in bad:
            _progress(f"cell refresh_prob={r['refresh_prob']} failed: {r['status']}")
        return 1

    curve = [(r["refresh_prob"], r["stabilized_place_coverage_mean"]) for r in rows]
    d = denominator(config.visits_per_agent)
    fn = analytic_gb_fn(config.n_places, d)
    result = fit(curve, fn, p_range=(min(ps), max(ps)))

    json_path = os.path.join(args.out, "calibration.json")
    write_result_json(result, json_path)
    overlay = [
        (p, gd, fn(result.predict_threshold(p))) for (p, gd) in curve
    ]
    overlay_path = os.path.join(args.out, "overlay.csv")
    write_overlay_csv(overlay, overlay_path)
    _write_manifest(args.out, "calibrate", resolved, [json_path, overlay_path])
    _progress(
        f"fit: m={result.m:.6g} c={result.c:.6g} rmse={result.rmse:.4g} places"
    )
    return 0


def _cmd_trace(args) -> int:
    records = traces_mod.read_trace(args.trace)
    if args.split_days:
        records = traces_mod.split_days(records)
    circles = traces_mod.cluster_places(records, args.radius)
    seq = traces_mod.extract_visits(records, circles)
    if args.top_k is not None:
        seq = traces_mod.top_places(seq, args.top_k)
    os.makedirs(args.out, exist_ok=True)

    circles_path = os.path.join(args.out, "circles.csv")
    with open(circles_path, "w", encoding="utf-8") as fh:
        fh.write("place,center_x,center_y,radius,popularity\n")
        for i, c in enumerate(circles):
            fh.write(f"{i},{c.center[0]:.10g},{c.center[1]:.10g},{c.radius:.10g},{c.popularity}\n")
    visits_path = os.path.join(args.out, "visits.csv")
    traces_mod.write_visits_csv(seq, visits_path)
    files = [circles_path, visits_path]

    if args.replay:
        runs = args.runs or 1
        seed = args.seed if args.seed is not None else 0
        all_place = []
        all_agent = []
        times = None
        for r in range(runs):
            rng = np.random.default_rng(seed + r)
            series = traces_mod.replay(seq, args.p, args.measure_every, rng)
            times = series.times
            all_place.append(series.place_coverage)
            all_agent.append(series.agent_coverage)
        place = np.stack(all_place).astype(float)
        agent = np.stack(all_agent).astype(float)
        sqrt_n = np.sqrt(runs)
        psem = place.std(axis=0, ddof=1) / sqrt_n if runs > 1 else np.zeros_like(place[0])
        asem = agent.std(axis=0, ddof=1) / sqrt_n if runs > 1 else np.zeros_like(agent[0])
        coverage_path = os.path.join(args.out, "coverage.csv")
        header = (
            "time,place_coverage_mean,place_coverage_sem,"
            "agent_coverage_mean,agent_coverage_sem"
        )
        data = np.column_stack([times, place.mean(axis=0), psem, agent.mean(axis=0), asem])
        np.savetxt(coverage_path, data, delimiter=",", header=header, comments="", fmt="%.10g")
        files.append(coverage_path)

    manifest_config = (
        f"trace = {args.trace}\nradius = {args.radius:.10g}\n"
        f"split_days = {args.split_days}\ntop_k = {args.top_k}\n"
        f"replay = {args.replay}\np = {args.p}\nmeasure_every = {args.measure_every}\n"
        f"seed = {args.seed}\nruns = {args.runs}\n"
    )
    _write_manifest(args.out, "trace", manifest_config, files)
    return 0


def _cmd_replay_figure1(args) -> int:
    series, events = run_worked_example()
    lines = ["step,agent_coverage,place_coverage"]
    for t, a, pl in zip(series.times, series.agent_coverage, series.place_coverage):
        lines.append(f"{t},{a},{pl}")
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    transfers = sum(1 for e in events if e.direction != "none")
    _progress(f"replayed {len(events)} visits, {transfers} transfers")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "replay.json" if args.json else "replay.csv")
        if args.json:
            payload = {
                "times": series.times.tolist(),
                "agent_coverage": series.agent_coverage.tolist(),
                "place_coverage": series.place_coverage.tolist(),
            }
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(table)
        _write_manifest(args.out, "replay-figure1", "", [path])
    return 0


def _add_common(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    if config_required:
        parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--runs", type=int, default=None, help="override config runs")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--parallelism", type=int, default=1, help="concurrent cells/runs (default 1)"
    )
    parser.add_argument("--json", action="store_true", help="JSON results instead of CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="throwbox",
        description="Dissemination simulator, bipartite twin, and calibration toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("sim", help="dissemination ensembles and sweeps")
    _add_common(p_sim)
    p_sim.set_defaults(func=_cmd_sim)

    p_bnw = sub.add_parser("bnw", help="bipartite growth ensembles and sweeps")
    _add_common(p_bnw)
    p_bnw.add_argument(
        "--export-edges", action="store_true", help="write edge lists for one realization"
    )
    p_bnw.set_defaults(func=_cmd_bnw)

    p_an = sub.add_parser("analytic", help="closed-form sweeps (no simulation)")
    _add_common(p_an)
    p_an.add_argument(
        "--quantity", choices=("gb", "cdf", "gd"), default="gb", help="formula to sweep"
    )
    p_an.set_defaults(func=_cmd_analytic)

    p_cal = sub.add_parser("calibrate", help="fit the refresh-to-threshold map")
    _add_common(p_cal)
    p_cal.set_defaults(func=_cmd_calibrate)

    p_tr = sub.add_parser("trace", help="ingest a position trace and replay it")
    p_tr.add_argument("--trace", required=True, help="trace file (agent_id, ts, x, y)")
    p_tr.add_argument("--radius", type=float, required=True, help="place circle radius")
    p_tr.add_argument("--split-days", action="store_true", help="per-day agent identities")
    p_tr.add_argument("--top-k", type=int, default=None, help="keep K most-visited places")
    p_tr.add_argument("--replay", action="store_true", help="replay the visit sequence")
    p_tr.add_argument("--p", type=float, default=0.1, help="refresh probability for replay")
    p_tr.add_argument(
        "--measure-every", type=int, default=4, help="visits per refresh/measure boundary"
    )
    p_tr.add_argument("--seed", type=int, default=None)
    p_tr.add_argument("--runs", type=int, default=None)
    p_tr.add_argument("--out", required=True)
    p_tr.add_argument("--parallelism", type=int, default=1)
    p_tr.add_argument("--json", action="store_true")
    p_tr.set_defaults(func=_cmd_trace)

    p_fig = sub.add_parser("replay-figure1", help="replay the fixed worked example")
    p_fig.add_argument("--out", default=None, help="optional output directory")
    p_fig.add_argument("--json", action="store_true")
    p_fig.set_defaults(func=_cmd_replay_figure1)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
