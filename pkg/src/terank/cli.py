"""Command-line front end.

Every subcommand reads at most one JSON file; flags only override the seed,
worker count and output directory.  Failures print a JSON object to stderr
and exit with a nonzero status.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig
from .engine import MAX_RECOMMENDED_TAGS, build_itn, read_edge_csv, write_edge_csv
from .errors import ConfigError, TERankError
from .mtr import export_mtr_csv, mtr_rank
from .ranking import katz_centrality, mix_with_reset, rank_graph, write_gml, write_ranking_csv
from .signals import (
    filter_constant,
    limit_scale,
    load_csv,
    load_tag_metadata,
    standardise,
    subsample,
    window,
    write_csv,
    write_tag_metadata,
)
from .simulators import ARConfig, MixingConfig, simulate_mixing, simulate_switching_var, simulate_var

EXIT_ERROR = 1
EXIT_IO = 3

NYQUIST_POWER_FRACTION = 0.1
MIN_RECOMMENDED_SAMPLES = 2000


# ----- shared steps ---------------------------------------------------------


def _load(cfg: RunConfig):
    metadata = load_tag_metadata(cfg.metadata) if cfg.metadata else None
    ts = load_csv(cfg.data, metadata)
    if cfg.subsample > 1:
        ts = subsample(ts, cfg.subsample)
    return ts


def _scale(ts, cfg: RunConfig):
    if cfg.scaling == "limit_scale":
        return limit_scale(ts)
    if cfg.scaling == "standardise":
        return standardise(ts, cfg.constant_tolerance)
    return ts


def _prepared(cfg: RunConfig):
    return _scale(_load(cfg), cfg)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def nyquist_fraction(values) -> float:
    """Share of the detrended power spectrum in the top tenth of the band.

    Much power near the Nyquist frequency hints that the signal was sampled
    too slowly for its dynamics.
    """
    x = np.asarray(values, dtype=float)
    x = x - x.mean()
    power = np.abs(np.fft.rfft(x)) ** 2
    power = power[1:]
    total = power.sum()
    if total <= 0:
        return 0.0
    cut = int(np.floor(0.9 * len(power)))
    return float(power[cut:].sum() / total)


# ----- subcommands ----------------------------------------------------------


def cmd_validate(cfg: RunConfig) -> dict:
    """Consistency report; raises on errors, lists warnings and advisories."""
    ts = load_csv(cfg.data)
    warnings_, advisories = [], []
    if cfg.metadata:
        metas = load_tag_metadata(cfg.metadata)
        ts = ts.with_metadata(metas)
        extra = sorted({m.name for m in metas} - set(ts.names))
        if extra:
            warnings_.append(f"metadata for tags not in the data: {', '.join(extra)}")
    elif cfg.scaling == "limit_scale":
        raise ConfigError("limit scaling needs a tag metadata file")
    if cfg.scaling == "limit_scale":
        limit_scale(ts)
    if cfg.subsample > 1:
        ts = subsample(ts, cfg.subsample)
    if ts.n_tags > MAX_RECOMMENDED_TAGS:
        warnings_.append(
            f"{ts.n_tags} tags: analyses are recommended to use at most {MAX_RECOMMENDED_TAGS}"
        )
    for name in ts.names:
        frac = nyquist_fraction(ts.column(name))
        if frac > NYQUIST_POWER_FRACTION:
            advisories.append(
                f"{name}: {frac:.0%} of spectral power lies near the Nyquist frequency; "
                "the sampling may be too slow for its dynamics"
            )
    spec = cfg.sweep_spec(ts) if not cfg.embedding.auto else None
    grid = spec.delays if spec else cfg.delay_grid(ts.sample_period)
    span = grid[-1] * ts.sample_period
    if span < 300.0:
        advisories.append(f"delay grid spans {span:g} s, less than five minutes")
    n = ts.n_samples
    if cfg.window.length is not None:
        n = cfg.analysis_slice(ts.n_samples)[1]
    if cfg.window.mtr_samples is not None:
        plan = cfg.window_plan(ts.n_samples)
        n = min(n, plan.window_samples)
    if n < MIN_RECOMMENDED_SAMPLES:
        advisories.append(f"windows of {n} samples are below the {MIN_RECOMMENDED_SAMPLES} recommended")
    return {
        "status": "ok",
        "n_samples": ts.n_samples,
        "n_tags": ts.n_tags,
        "sample_period": ts.sample_period,
        "delay_grid": list(grid),
        "warnings": warnings_,
        "advisories": advisories,
    }


def cmd_analyse(cfg: RunConfig) -> dict:
    """Edge CSV, ranking CSV and GML for the configured single window."""
    ts = _prepared(cfg)
    start, length = cfg.analysis_slice(ts.n_samples)
    ts = window(ts, start, length)
    ts, removed = filter_constant(ts, cfg.constant_tolerance)
    spec = cfg.sweep_spec(ts)
    graph, edges = build_itn(ts, spec, seed=cfg.seed, workers=cfg.workers)
    rank = cfg.rank_spec(ts.names)
    if cfg.rank.method == "katz":
        scores = katz_centrality(graph.weights.T, rank)
    else:
        scores = rank_graph(graph, rank)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_csv(out / "edges.csv", edges, ts.sample_period)
    write_ranking_csv(out / "ranking.csv", ts.tags, scores)
    n_edges = write_gml(out / "itn.gml", ts.names, graph.weights, scores,
                        graph.delays * ts.sample_period)
    summary = {
        "config_fingerprint": spec.fingerprint(),
        "seed": cfg.seed,
        "window": [start, length],
        "removed_constant": removed,
        "tags": ts.names,
        "scores": [float(v) for v in scores.scores],
        "edges_written": n_edges,
        "embedding": [spec.embedding.k_target, spec.embedding.l_source, spec.embedding.tau],
        "directionality_mode": spec.directionality_mode,
    }
    if spec.directionality_mode == "paper_literal":
        summary["note"] = (
            "paper_literal keeps links whose backward sweep dominates; "
            "the corrected mode keeps forward-dominant links"
        )
    _write_json(out / "summary.json", summary)
    return summary


def cmd_mtr(cfg: RunConfig, per_window: bool = False) -> dict:
    """Rolling-window score matrix written as ``mtr.csv``."""
    ts = _prepared(cfg)
    plan = cfg.window_plan(ts.n_samples)
    spec = cfg.sweep_spec(ts)
    result = mtr_rank(ts, plan, spec, cfg.rank_spec(ts.names), seed=cfg.seed,
                      workers=cfg.workers, constant_tolerance=cfg.constant_tolerance)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_mtr_csv(result, out / "mtr.csv")
    if per_window:
        for k, row in enumerate(result.scores):
            write_ranking_csv(out / f"ranking_window_{k:03d}.csv", ts.tags, row)
    summary = {
        "config_fingerprint": result.fingerprint,
        "seed": cfg.seed,
        "windows": len(plan),
        "window_samples": plan.window_samples,
        "step": plan.step,
        "degenerate_windows": list(result.degenerate),
        "argmax_tags": result.argmax_tags(),
    }
    _write_json(out / "mtr_summary.json", summary)
    return summary


def _scenario(path):
    if path is None:
        return {"kind": "mixing"}
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"no such scenario file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("scenario must be a JSON object")
    return d


def cmd_simulate(scenario: dict, out_dir) -> dict:
    """Write ``data.csv``, ``tags.json`` and the resolved ``scenario.json``.

    ``kind`` is ``mixing`` (fields of :class:`MixingConfig`) or ``var``
    (fields of :class:`ARConfig` plus ``n_vars``, ``structure`` and the
    optional ``switch_index``/``second_structure``).
    """
    d = dict(scenario)
    kind = d.pop("kind", "mixing")
    if kind == "mixing":
        cfg = MixingConfig.from_json(d)
        ts = simulate_mixing(cfg)
        resolved = {"kind": "mixing", **cfg.to_json()}
    elif kind == "var":
        n_vars = int(d.pop("n_vars", 2))
        structure = [tuple(s) for s in d.pop("structure", [[0, 1]])]
        switch = d.pop("switch_index", None)
        second = [tuple(s) for s in d.pop("second_structure", [])]
        names = d.pop("names", None)
        unknown = set(d) - set(ARConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown scenario keys {sorted(unknown)}")
        if "self_coefficients" in d:
            d["self_coefficients"] = tuple(d["self_coefficients"])
        cfg = ARConfig(**d)
        if switch is None:
            ts = simulate_var(cfg, n_vars, structure, names)
        else:
            ts = simulate_switching_var(cfg, n_vars, structure, second, int(switch), names)
        resolved = {"kind": "var", "n_vars": n_vars, "structure": structure,
                    "switch_index": switch, "second_structure": second, "names": names,
                    **{k: getattr(cfg, k) for k in ARConfig.__dataclass_fields__}}
    else:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(ts, out / "data.csv")
    write_tag_metadata(ts.tags, out / "tags.json")
    _write_json(out / "scenario.json", resolved)
    return {"status": "ok", "n_samples": ts.n_samples, "tags": ts.names,
            "data": str(out / "data.csv"), "metadata": str(out / "tags.json")}


def cmd_export_gml(edges_path, out_path, percentile=None, m=0.999) -> dict:
    """Re-filter an edge CSV into GML, with eigenvector scores of the full graph."""
    tags, W, D, _ = read_edge_csv(edges_path)
    scores = None
    if len(tags) >= 2:
        from .ranking import RankSpec

        scores = rank_graph(W, RankSpec(m=m))
    n = write_gml(out_path, tags, W, scores, D, percentile)
    return {"status": "ok", "edges_written": n, "nodes": len(tags)}


# ----- entry point ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="terank", description="Transfer-entropy fault source ranking")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def run_cmd(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("config", help="run configuration JSON")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--workers", type=int, help="override the worker count")
        s.add_argument("--out-dir", help="override the output directory")
        return s

    run_cmd("validate", "check data, metadata and configuration")
    run_cmd("analyse", "rank one window: edges.csv, ranking.csv, itn.gml")
    m = run_cmd("mtr", "rolling-window ranking: mtr.csv")
    m.add_argument("--per-window", action="store_true", help="also write one ranking CSV per window")

    s = sub.add_parser("simulate", help="generate a benchmark dataset")
    s.add_argument("scenario", nargs="?", help="scenario JSON (default: mixing process)")
    s.add_argument("--out-dir", required=True)

    g = sub.add_parser("export-gml", help="write an edge CSV as GML")
    g.add_argument("edges", help="edge CSV written by analyse")
    g.add_argument("--out", required=True, help="GML file to write")
    g.add_argument("--percentile", type=float, help="drop edges below this weight percentile")
    return p


def _fail(exc, status):
    payload = exc.to_dict() if isinstance(exc, TERankError) else {
        "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command == "simulate":
                result = cmd_simulate(_scenario(args.scenario), args.out_dir)
            elif args.command == "export-gml":
                result = cmd_export_gml(args.edges, args.out, args.percentile)
            else:
                cfg = RunConfig.load(args.config).with_overrides(
                    seed=args.seed, workers=args.workers, output_dir=args.out_dir)
                if args.command == "validate":
                    result = cmd_validate(cfg)
                elif args.command == "analyse":
                    result = cmd_analyse(cfg)
                else:
                    result = cmd_mtr(cfg, args.per_window)
        for w in caught:
            print(json.dumps({"warning": str(w.message)}), file=sys.stderr)
    except TERankError as exc:
        return _fail(exc, EXIT_ERROR)
    except OSError as exc:
        return _fail(exc, EXIT_IO)
    print(json.dumps(result, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
