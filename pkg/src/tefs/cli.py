"""Command-line entry point: ``tefs {select,synth,bench,estimate}``.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or validation
error. Every command echoes its fully resolved configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import TefsError, ValidationError
from .estimators import Backend, EstimatorConfig, transfer_entropy
from .evaluation import BenchmarkConfig, format_table, run_benchmark, write_reports
from .scm import GraphTemplate, ScmSpec, builtin_graph, extend_with_noise_triples, generate
from .selection import SelectionConfig, Task, select
from .timeseries import LagSpec, load_csv, save_csv, standardize

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    return doc


def _merge(args, file_cfg: dict, defaults: dict) -> dict:
    """Flags override the config file, which overrides defaults."""
    out = dict(defaults)
    for key in defaults:
        if key in file_cfg:
            out[key] = file_cfg[key]
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return out


def _columns(ds, names) -> list:
    out = []
    for name in names:
        if name not in ds.feature_names:
            raise ValidationError(f"column {name!r} is not a feature column")
        out.append(ds.feature_names.index(name))
    return out


def _split(value) -> list:
    if value is None:
        return []
    if isinstance(value, str):
        return [c.strip() for c in value.split(",") if c.strip()]
    return list(value)


# --- commands -------------------------------------------------------------

SELECT_DEFAULTS = {
    "data": None, "target": None, "direction": None, "L": None, "M": None,
    "threshold": None, "B": None, "estimator": "ksg", "k": 5, "seed": 0,
    "task": "regression", "no_standardize": False, "epsilon_stop": 0.0,
}


def cmd_select(args) -> int:
    cfg = _merge(args, _load_config(args.config), SELECT_DEFAULTS)
    missing = [k for k in ("data", "target", "direction", "L", "M", "threshold") if cfg[k] is None]
    if missing:
        raise ValidationError(f"missing required settings: {', '.join('--' + m for m in missing)}")
    ds = load_csv(cfg["data"], cfg["target"])
    est = EstimatorConfig(cfg["estimator"], cfg["k"], rng_seed=cfg["seed"])
    # integer symbols would be destroyed by z-scoring
    if not cfg["no_standardize"] and est.backend is not Backend.DISCRETE:
        ds = standardize(ds)
    scfg = SelectionConfig(
        lags=LagSpec(cfg["L"], cfg["M"]), threshold=float(cfg["threshold"]),
        target_bound_B=cfg["B"], task=Task(cfg["task"]), estimator=est,
        epsilon_stop=float(cfg["epsilon_stop"]),
    )
    result = select(ds, scfg, cfg["direction"])
    doc = result.to_json()
    doc["selected_names"] = [ds.feature_names[i] for i in result.selected]
    doc["config"] = cfg
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _synth_template(graph: str, triples: int, seed: int) -> GraphTemplate:
    if graph.endswith(".json"):
        try:
            spec = ScmSpec.from_json(json.loads(Path(graph).read_text(encoding="utf-8")))
        except OSError as exc:
            raise ValidationError(f"cannot read graph spec {graph}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"graph spec {graph} is not valid JSON: {exc}") from None
        template = GraphTemplate(spec.n_features, spec.edges, spec.node_noise_std)
    else:
        template = builtin_graph(graph).with_coefficients(seed)
    if triples:
        template = extend_with_noise_triples(template, triples, seed)
    return template


def cmd_synth(args) -> int:
    if args.n < 1 or args.triples < 0:
        raise ValidationError("--n must be positive and --triples nonnegative")
    template = _synth_template(args.graph, args.triples, args.seed)
    spec = template.to_spec(noise_std=args.noise, length=args.n, burn_in=args.burn_in, seed=args.seed)
    ds, truth = generate(spec)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        save_csv(ds, out / "data.csv")
        doc = {**truth.to_json(), "spec": spec.to_json()}
        (out / "truth.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"tefs synth: cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {ds.T} rows x {ds.D + 1} columns to {out / 'data.csv'}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = BenchmarkConfig.from_json(_load_config(args.config))
    reports = run_benchmark(cfg, jobs=args.jobs)
    print(format_table(reports))
    try:
        write_reports(reports, cfg, args.out)
    except OSError as exc:
        print(f"tefs bench: cannot write reports to {args.out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_estimate(args) -> int:
    ds = load_csv(args.data, args.target)
    source, cond = _split(args.source), _split(args.cond)
    if not source:
        raise ValidationError("--source needs at least one column")
    shared = set(source) & set(cond)
    if shared:
        raise ValidationError(f"columns {sorted(shared)} appear in both --source and --cond")
    est = EstimatorConfig(args.estimator, args.k, rng_seed=args.seed)
    lags = LagSpec(args.L, args.M)
    value = transfer_entropy(ds, _columns(ds, source), _columns(ds, cond), lags, est)
    resolved = {
        "data": args.data, "target": args.target, "source": source, "cond": cond,
        "L": args.L, "M": args.M, "estimator": est.backend.value, "k": est.k, "seed": args.seed,
    }
    # stdout carries only the number so that it can be piped
    print(json.dumps({"config": resolved}), file=sys.stderr)
    print(f"{value:.6f}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tefs", description="Transfer-entropy feature selection for time series.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("select", help="run forward or backward TEFS on a CSV file")
    s.add_argument("--config", help="JSON file with any of the flag values")
    s.add_argument("--data")
    s.add_argument("--target")
    s.add_argument("--direction", choices=["forward", "backward"])
    s.add_argument("--L", type=int)
    s.add_argument("--M", type=int)
    s.add_argument("--threshold", type=float)
    s.add_argument("--B", type=float, help="bound on |Y|; default max |Y| of the data")
    s.add_argument("--estimator", choices=[b.value for b in Backend], default=None)
    s.add_argument("--k", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--task", choices=[t.value for t in Task], default=None)
    s.add_argument("--epsilon-stop", dest="epsilon_stop", type=float)
    s.add_argument("--no-standardize", dest="no_standardize", action="store_true", default=None)
    s.set_defaults(func=cmd_select)

    g = sub.add_parser("synth", help="simulate a benchmark graph to CSV")
    g.add_argument("--graph", required=True, help="graph3, graph5, graph10 or a ScmSpec .json file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--triples", type=int, default=0)
    g.add_argument("--burn-in", dest="burn_in", type=int, default=200)
    g.set_defaults(func=cmd_synth)

    b = sub.add_parser("bench", help="run a benchmark suite from a JSON config")
    b.add_argument("--config", required=True)
    b.add_argument("--jobs", type=int, help="worker processes (default: TEFS_JOBS or CPU count)")
    b.add_argument("--out", default=".")
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("estimate", help="estimate conditional transfer entropy to the target")
    e.add_argument("--data", required=True)
    e.add_argument("--target", required=True)
    e.add_argument("--source", required=True, help="comma-separated feature columns")
    e.add_argument("--cond", help="comma-separated conditioning columns")
    e.add_argument("--L", type=int, default=1)
    e.add_argument("--M", type=int, default=1)
    e.add_argument("--estimator", choices=[b.value for b in Backend], default="ksg")
    e.add_argument("--k", type=int, default=5)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_estimate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TefsError as exc:
        print(f"tefs {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"tefs {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
