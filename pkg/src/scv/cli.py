"""``scv`` command line: verify | sample | simulate | repair | report.

Settings resolve as command-line flag, then environment variable
``SCV_<NAME>`` (upper case, dashes as underscores), then the ``--config``
file (``name = value`` lines, ``#`` comments), then the built-in default.

Exit codes: 0 success, 2 invalid input or arguments, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

from .consistency import ScoringConfig, full_report
from .equivalence import make_provider
from .errors import (
    BoundInvalidError,
    DegenerateSampleError,
    MissingInputError,
    ParseError,
    SCVError,
    ValidationError,
)
from .repair import repair_trace
from .sampler import HttpBackend, MockBackend, SamplerConfig, run_adaptive
from .simlab import (
    Dag,
    SimSpec,
    convergence_check,
    entropy_reduction_check,
    intermediate_benefit,
    simulate_majority,
    simulate_propagation,
)
from .traces import parse_trace_set, trace_from_dict, trace_set_to_dict, trace_to_dict
from .verify import verify

log = logging.getLogger("scv")

EXIT_OK, EXIT_INVALID, EXIT_INTERNAL = 0, 2, 3

# name -> (type, default)
SETTINGS = {
    "seed": (int, 0),
    "jobs": (int, 1),
    "output_dir": (str, "."),
    "format": (str, "both"),
    "alpha": (float, 0.5),
    "flag_threshold": (float, 0.5),
    "similarity_provider": (str, "token"),
    "similarity_threshold": (float, 0.85),
    "iso_method": (str, "auto"),
    "iso_exact_cap": (int, 24),
    "beta": (float, 0.5),
    "lambda": (float, 0.5),
    "numeric_rel_tol": (float, 1e-6),
    "k0": (int, 3),
    "k_max": (int, 10),
    "tau_low": (float, 0.5),
    "tau_high": (float, 0.6),
    "rate": (float, 1.0),
    "corruption": (float, 0.1),
    "threshold": (float, 0.5),
    "trials": (int, 10_000),
    "runs": (int, 500),
}


def read_config_file(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'name = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise ValidationError(f"{path}:{lineno}: unknown setting {key!r}")
        out[key] = value.strip('"').strip("'")
    return out


class Settings:
    def __init__(self, args, file_values):
        self.args = args
        self.file_values = file_values

    def __getitem__(self, name):
        typ, default = SETTINGS[name]
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        env = os.environ.get(f"SCV_{name.upper()}")
        raw = env if env is not None else self.file_values.get(name)
        if raw is None:
            return default
        try:
            return typ(raw)
        except ValueError:
            raise ValidationError(f"setting {name}: cannot read {raw!r} as {typ.__name__}") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--format", choices=("json", "csv", "both"))
    common.add_argument("--config", help="settings file with 'name = value' lines")
    common.add_argument("--lenient", action="store_true", help="ignore unknown document fields")
    common.add_argument("-v", "--verbose", action="store_true")

    scoring = argparse.ArgumentParser(add_help=False)
    scoring.add_argument("--alpha", type=float)
    scoring.add_argument("--flag-threshold", dest="flag_threshold", type=float)
    scoring.add_argument("--similarity-provider", dest="similarity_provider",
                         choices=("token", "canonical", "remote"))
    scoring.add_argument("--similarity-threshold", dest="similarity_threshold", type=float)
    scoring.add_argument("--iso-method", dest="iso_method", choices=("exact", "spectral", "auto"))
    scoring.add_argument("--iso-exact-cap", dest="iso_exact_cap", type=int)

    parser = argparse.ArgumentParser(prog="scv", description="Self-consistency verification of reasoning traces.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common, scoring], help="score a trace-set document")
    p.add_argument("traces")
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--numeric-rel-tol", dest="numeric_rel_tol", type=float)

    p = sub.add_parser("sample", parents=[common, scoring], help="adaptive sampling")
    p.add_argument("--backend", choices=("mock", "http"), default="mock")
    p.add_argument("--query")
    p.add_argument("--k0", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--tau-low", dest="tau_low", type=float)
    p.add_argument("--tau-high", dest="tau_high", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--truth", help="trace file used as ground truth by the mock backend")
    p.add_argument("--corruption", type=float)
    p.add_argument("--sweep", type=_float_list, help="mock only: comma-separated corruption rates")
    p.add_argument("--runs", type=int, help="runs per corruption rate in a sweep")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo bound checks")
    p.add_argument("kind", choices=("majority", "propagation", "benefit", "entropy", "convergence"))
    p.add_argument("--tau", type=_float_list, default=[0.1, 0.2, 0.3, 0.4])
    p.add_argument("--k", type=_int_list, default=[1, 3, 5, 11, 25])
    p.add_argument("--p-correct", dest="p_correct", type=float)
    p.add_argument("--epsilon", type=_float_list, default=[0.1])
    p.add_argument("--epsilon-prime", dest="epsilon_prime", type=float, default=0.05)
    p.add_argument("--delta", type=_float_list, default=[0.05, 0.1, 0.2])
    p.add_argument("--dag", action="append", help="chain:T | diamond | random:n,p (repeatable)")
    p.add_argument("--trials", type=int)

    p = sub.add_parser("repair", parents=[common, scoring], help="repair one trace")
    p.add_argument("--traces", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("report", parents=[common], help="turn verify/simulate/sample outputs into plot data")
    p.add_argument("--input-dir", dest="input_dir", required=True)
    return parser


# -- helpers ----------------------------------------------------------------------


def _load(path, lenient):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise MissingInputError(f"cannot read {path}: {exc}") from None
    return parse_trace_set(data, strict=not lenient)


def _scoring(s: Settings) -> ScoringConfig:
    provider = make_provider(s["similarity_provider"], s["similarity_threshold"])
    return ScoringConfig(
        alpha=s["alpha"], flag_threshold=s["flag_threshold"], provider=provider,
        iso_method=s["iso_method"], iso_cap=s["iso_exact_cap"], seed=s["seed"],
    )


def _outdir(s: Settings) -> Path:
    out = Path(s["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, rows):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _num(x) -> str:
    return repr(float(x))


# -- commands ---------------------------------------------------------------------


def cmd_verify(args, s: Settings) -> int:
    traces = _load(args.traces, args.lenient)
    summary, report = verify(traces, _scoring(s), beta=s["beta"], lam=s["lambda"], rel_tol=s["numeric_rel_tol"])
    out = _outdir(s)
    fmt = s["format"]
    if fmt in ("json", "both"):
        _write_json(out / "report.json", summary)
    if fmt in ("csv", "both"):
        rows = report.csv_rows()
        for domain in ("theorem", "symbolic", "numeric"):
            block = summary.get(domain)
            if block:
                for key in ("combined", "sc_proof", "soundness", "tree_similarity", "algebraic_equivalence",
                            "score", "threshold_consistency"):
                    if block.get(key) is not None:
                        rows.append((domain, key, _num(block[key]), "false"))
        _write_csv(out / "report.csv", rows)
    for w in summary["warnings"]:
        log.warning(w)
    print(f"k={traces.k} psi={report.global_:.4f} phi={report.entropy:.4f} "
          f"lambda={report.combined:.4f} flagged={len(report.flagged)}")
    return EXIT_OK


def _load_truth(path, lenient):
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MissingInputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON: {exc}") from None
    if isinstance(obj, dict) and "traces" in obj:
        ts = parse_trace_set(json.dumps(obj), strict=not lenient)
        return ts.traces[0], ts.domain
    query = obj.get("query", "") if isinstance(obj, dict) else ""
    return trace_from_dict(obj, query, strict=not lenient), "generic"


def _sampler_config(s: Settings) -> SamplerConfig:
    return SamplerConfig(k0=s["k0"], k_max=s["k_max"], tau_low=s["tau_low"], tau_high=s["tau_high"],
                         rate=s["rate"], seed=s["seed"])


def cmd_sample(args, s: Settings) -> int:
    config = _sampler_config(s)
    scoring = _scoring(s)
    out = _outdir(s)

    def scorer(ts):
        return full_report(ts, scoring, degenerate="mark")

    if args.backend == "mock":
        if not args.truth:
            raise ValidationError("the mock backend needs --truth")
        truth, domain = _load_truth(args.truth, args.lenient)
        query = args.query or truth.query
        truth = truth if truth.query == query else trace_from_dict(trace_to_dict(truth), query)
        if args.sweep:
            rows = [("corruption", "run", "total_samples", "stop_reason", "consensus_correct")]
            for rate in args.sweep:
                for run in range(s["runs"]):
                    backend = MockBackend(truth, rate, seed=s["seed"] * 1_000_003 + run)
                    o = run_adaptive(query, backend, config, scorer, domain)
                    rows.append((_num(rate), run, o.total_samples, o.stop_reason,
                                 str(o.consensus.final_answer == truth.final_answer).lower()))
            _write_csv(out / "sweep.csv", rows)
            print(f"wrote {len(rows) - 1} runs to {out / 'sweep.csv'}")
            return EXIT_OK
        backend = MockBackend(truth, s["corruption"], seed=s["seed"])
    else:
        if not args.query:
            raise ValidationError("the http backend needs --query")
        query, domain = args.query, "generic"
        backend = HttpBackend(seed=s["seed"], jobs=s["jobs"])
    outcome = run_adaptive(query, backend, config, scorer, domain)
    _write_json(out / "traces.json", trace_set_to_dict(outcome.traces))
    _write_json(out / "outcome.json", {
        "stop_reason": outcome.stop_reason,
        "total_samples": outcome.total_samples,
        "rounds": [{"t": t, "lambda": lam, "drawn": d} for t, lam, d in outcome.rounds],
        "consensus": trace_to_dict(outcome.consensus),
    })
    _write_csv(out / "rounds.csv", [("t", "lambda", "drawn")] + [(t, _num(lam), d) for t, lam, d in outcome.rounds])
    print(f"{outcome.stop_reason} after {outcome.total_samples} samples; consensus {outcome.consensus.trace_id}")
    return EXIT_OK


def cmd_simulate(args, s: Settings) -> int:
    trials = s["trials"]
    seed = s["seed"]
    jobs = s["jobs"]
    dags = args.dag or ["chain:5"]
    kind = args.kind
    if kind == "majority":
        head = ["tau", "k"]
        rows = []
        taus = [1.0 - args.p_correct] if args.p_correct is not None else args.tau
        for tau in taus:
            for k in args.k:
                spec = SimSpec(tau=tau, k=k, trials=trials, seed=seed, jobs=jobs)
                r = simulate_majority(spec, p_correct=args.p_correct)
                rows.append([_num(tau), k, r])
    elif kind == "propagation":
        head = ["dag", "epsilon"]
        rows = []
        for d in dags:
            for eps in args.epsilon:
                spec = SimSpec(epsilon=eps, trials=trials, seed=seed, dag=Dag.parse(d, seed), jobs=jobs)
                rows.append([d, _num(eps), simulate_propagation(spec)])
    elif kind == "benefit":
        head = ["dag", "epsilon", "epsilon_prime"]
        rows = []
        for d in dags:
            for eps in args.epsilon:
                spec = SimSpec(epsilon=eps, trials=trials, seed=seed, dag=Dag.parse(d, seed), jobs=jobs)
                rows.append([d, _num(eps), _num(args.epsilon_prime), intermediate_benefit(spec, args.epsilon_prime)])
    elif kind == "entropy":
        head = ["trials"]
        rows = [[trials, entropy_reduction_check(trials, seed)]]
    else:
        head = ["tau", "k", "delta"]
        rows = []
        for tau in args.tau:
            for k in args.k:
                spec = SimSpec(tau=tau, k=k, trials=trials, seed=seed, jobs=jobs)
                for r in convergence_check(spec, deltas=args.delta):
                    rows.append([_num(tau), k, _num(r.details["delta"]), r])
    table = [head + ["empirical", "bound", "ci", "satisfied"]]
    for row in rows:
        r = row[-1]
        table.append(row[:-1] + [_num(r.empirical), _num(r.theoretical_bound), _num(r.ci_halfwidth),
                                 str(r.satisfied).lower()])
    path = _outdir(s) / f"simulate_{kind}.csv"
    _write_csv(path, table)
    ok = sum(1 for row in rows if row[-1].satisfied)
    print(f"{kind}: {ok}/{len(rows)} cells satisfied; wrote {path}")
    return EXIT_OK


def cmd_repair(args, s: Settings) -> int:
    traces = _load(args.traces, args.lenient)
    scoring = _scoring(s)
    try:
        target = traces.trace(args.target)
    except KeyError:
        raise ValidationError(f"no trace with id {args.target!r}") from None
    report = full_report(traces, scoring, degenerate="mark")
    repaired = repair_trace(target, traces, report, s["threshold"], scoring.provider)
    doc = trace_set_to_dict(traces.replace(repaired))
    doc["traces"] = [trace_to_dict(repaired)]
    _write_json(_outdir(s) / "repaired.json", doc)
    changed = sum(1 for a, b in zip(target.statements, repaired.statements) if a != b)
    removed = len(target.statements) - len(repaired.statements)
    print(f"repaired {target.trace_id}: {changed} replaced, {removed} removed")
    return EXIT_OK


_DIFFICULTY = ("easy", "medium", "hard")


def cmd_report(args, s: Settings) -> int:
    src = Path(args.input_dir)
    if not src.is_dir():
        raise MissingInputError(f"{src} is not a directory")
    out = _outdir(s)
    written = []

    majority = src / "simulate_majority.csv"
    if majority.exists():
        with majority.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        table = [("tau", "k", "empirical", "bound", "ci")]
        table += [(r["tau"], r["k"], r["empirical"], r["bound"], r["ci"]) for r in rows]
        _write_csv(out / "bound_curve.csv", table)
        written.append("bound_curve.csv")

    sweep = src / "sweep.csv"
    if sweep.exists():
        with sweep.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        groups = {}
        for r in rows:
            groups.setdefault(float(r["corruption"]), []).append(int(r["total_samples"]))
        rates = sorted(groups)
        names = _DIFFICULTY if len(rates) == 3 else [f"level{i + 1}" for i in range(len(rates))]
        table = [("difficulty", "corruption", "mean_samples", "runs")]
        for name, rate in zip(names, rates):
            vals = groups[rate]
            table.append((name, _num(rate), _num(sum(vals) / len(vals)), len(vals)))
        _write_csv(out / "difficulty.csv", table)
        written.append("difficulty.csv")

    bins = 10
    hist = {}
    for path in sorted(src.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            continue
        if not isinstance(doc, dict) or "report" not in doc:
            continue
        rep = doc["report"]
        for level, items in (("statement", rep.get("per_statement", [])), ("edge", rep.get("per_edge", []))):
            for item in items:
                b = min(int(float(item["score"]) * bins), bins - 1)
                hist[(level, b)] = hist.get((level, b), 0) + 1
    if hist:
        table = [("level", "bin_lo", "bin_hi", "count")]
        for level in ("statement", "edge"):
            for b in range(bins):
                table.append((level, _num(b / bins), _num((b + 1) / bins), hist.get((level, b), 0)))
        _write_csv(out / "score_histogram.csv", table)
        written.append("score_histogram.csv")

    if not written:
        raise MissingInputError(f"no verify, simulate or sweep outputs found in {src}")
    print("wrote " + ", ".join(written))
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "sample": cmd_sample,
    "simulate": cmd_simulate,
    "repair": cmd_repair,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        return COMMANDS[args.command](args, Settings(args, file_values))
    except (ValidationError, MissingInputError, ParseError, BoundInvalidError, DegenerateSampleError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SCVError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
