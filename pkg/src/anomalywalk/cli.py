"""Command-line front end.

Verbs:
  check     validate a graph spec, print dimension and unitarity status
  evolve    write the per-step probability CSV for one walk
  search    run one search, write a JSON summary plus per-step CSV
  spectrum  write the eigenphase CSV of the reduced walk operator
  perturb   run the eigenphase-shift sweep, write shift and fit CSVs
  sweep     run searches across a size list, write the peak-step CSV
  baseline  classical adjacency-list query statistics as JSON

A spec argument is either a path to a JSON file or an inline JSON object
(anything starting with '{').  Every failure prints one line starting
with ``error:<category>:`` on stderr; exit status is 1 for validation
problems and 2 for numerical certification failures.  The environment
variable ANOMALY_WALK_THREADS caps parallelism across sweep sizes
(0 or unset: one worker per CPU).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .collapse import invariant_basis, reduce_operator
from .errors import (
    AnomalyWalkError,
    ConfigurationError,
    NoPredictionError,
    SpecSemanticError,
    SpecSyntaxError,
)
from .perturb import (
    DEFAULT_SWEEP_SIZES,
    perturbation_sweep,
    write_fits_csv,
    write_shifts_csv,
)
from .search import (
    InitialStateKind,
    baseline_statistics,
    family_seeds,
    predicted_hitting_step,
    run_search,
    search_summary,
    write_per_step_csv,
)
from .spectral import dump_spectrum_csv, eigendecompose
from .stargraph import Anomaly, PhaseAngle, StarGraph, build_star, parse_spec
from .stepop import build_step_operator, check_unitarity

_KIND_NAMES = ("minus", "plus", "inout", "loop_pi", "loop_third")
_ANOMALY_NAMES = ("none", "extra_edge", "loop", "extended_edge", "missing_loop")


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; remap to the validation status 1
    # and keep the machine-parsable prefix
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error:usage:{message}\n")
        raise SystemExit(1)


def _load_graph(spec_arg: str) -> StarGraph:
    if spec_arg.lstrip().startswith("{"):
        return parse_spec(spec_arg)
    try:
        text = Path(spec_arg).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(
            f"cannot read spec file {spec_arg}: {exc.strerror or exc}") from exc
    try:
        return parse_spec(text)
    except SpecSyntaxError as exc:
        err = SpecSyntaxError(f"{spec_arg}: {exc}")
        err.line, err.column = exc.line, exc.column
        raise err from None
    except SpecSemanticError as exc:
        raise SpecSemanticError(f"{spec_arg}: {exc}") from None


def _require_out(path_str: str) -> Path:
    path = Path(path_str)
    if not path.parent.exists():
        raise ConfigurationError(
            f"output directory {path.parent} does not exist")
    return path


def _parse_complex(text: str, flag: str) -> complex:
    try:
        return complex(text)
    except ValueError:
        raise ConfigurationError(
            f"{flag} expects a complex literal, got {text!r}") from None


def _parse_kind(args) -> InitialStateKind:
    if args.kind == "minus":
        return InitialStateKind.minus()
    if args.kind == "plus":
        return InitialStateKind.plus()
    if args.kind == "loop_pi":
        return InitialStateKind.loop_pi()
    if args.kind == "loop_third":
        return InitialStateKind.loop_third()
    if args.amp_out is None or args.amp_in is None:
        raise ConfigurationError("kind inout requires --amp-out and --amp-in")
    return InitialStateKind.inout(_parse_complex(args.amp_out, "--amp-out"),
                                  _parse_complex(args.amp_in, "--amp-in"))


def _parse_sizes(text: str | None) -> tuple[int, ...]:
    if text is None:
        return DEFAULT_SWEEP_SIZES
    try:
        sizes = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigurationError(
            f"--n-list expects comma-separated integers, got {text!r}") from None
    if not sizes:
        raise ConfigurationError("--n-list is empty")
    return sizes


def _worker_cap(n_tasks: int) -> int:
    raw = os.environ.get("ANOMALY_WALK_THREADS")
    if raw is None or not raw.strip():
        cap = 0
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigurationError(
                f"ANOMALY_WALK_THREADS must be an integer, got {raw!r}") from None
        if cap < 0:
            raise ConfigurationError("ANOMALY_WALK_THREADS must be >= 0")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def _default_steps(graph: StarGraph) -> int:
    """Horizon bracketing the first probability peak.

    The evolution is nearly periodic, so a window much longer than the
    first peak lets a later revival win the argmax; with a closed-form
    prediction the window stops well before the next revival.
    """
    try:
        return 2 * predicted_hitting_step(graph) + 6
    except NoPredictionError:
        return int(4 * math.sqrt(graph.n_spokes)) + 10


def _emit_json(payload: dict, out: Path | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _cmd_check(args) -> int:
    graph = _load_graph(args.spec)
    op = build_step_operator(graph)
    report = check_unitarity(op)
    status = "pass" if report.passed else "fail"
    print(f"dim={graph.hilbert_dim} unitary={status} "
          f"max_dev={report.max_deviation:.3e}")
    return 0 if report.passed else 2


def _cmd_evolve(args) -> int:
    graph = _load_graph(args.spec)
    kind = _parse_kind(args)
    steps = args.steps if args.steps else _default_steps(graph)
    result = run_search(graph, kind, steps, method=args.method)
    write_per_step_csv(result, _require_out(args.out))
    return 0


def _cmd_search(args) -> int:
    graph = _load_graph(args.spec)
    kind = _parse_kind(args)
    steps = args.max_steps if args.max_steps else _default_steps(graph)
    result = run_search(graph, kind, steps, method=args.method)
    for line in result.warnings:
        print(f"warning: {line}", file=sys.stderr)
    out = _require_out(args.out) if args.out else None
    _emit_json(search_summary(graph, kind, result), out)
    csv_path = None
    if args.per_step_out:
        csv_path = _require_out(args.per_step_out)
    elif out is not None:
        csv_path = out.with_name(out.stem + ".steps.csv")
    if csv_path is not None:
        write_per_step_csv(result, csv_path)
    return 0


def _cmd_spectrum(args) -> int:
    graph = _load_graph(args.spec)
    kind = _parse_kind(args)
    op = build_step_operator(graph)
    basis = invariant_basis(op, family_seeds(graph, kind))
    spectrum = eigendecompose(reduce_operator(op, basis))
    dump_spectrum_csv(spectrum, _require_out(args.out))
    print(f"dim={basis.dim} branches={len(spectrum.eigenphases)}")
    return 0


def _anomaly_from_args(args) -> Anomaly:
    phase = None
    if args.phase_num is not None or args.phase_den is not None:
        if args.phase_num is None or args.phase_den is None:
            raise ConfigurationError(
                "--phase-num and --phase-den must be given together")
        if args.phase_rad is not None:
            raise ConfigurationError(
                "give the phase as a fraction of pi or in radians, not both")
        phase = PhaseAngle.from_pi_fraction(args.phase_num, args.phase_den)
    elif args.phase_rad is not None:
        phase = PhaseAngle.from_radians(args.phase_rad)
    name = args.anomaly
    if name == "none":
        return Anomaly.none()
    if name == "extra_edge":
        return Anomaly.extra_edge(args.u, args.v, phase)
    if name == "loop":
        return Anomaly.loop(args.at, phase)
    if name == "extended_edge":
        return Anomaly.extended_edge(args.at, phase)
    return Anomaly.missing_loop(args.at, phase)


def _cmd_perturb(args) -> int:
    if bool(args.spec) == bool(args.anomaly):
        raise ConfigurationError("provide exactly one of --spec or --anomaly")
    if args.spec:
        anomaly = _load_graph(args.spec).anomaly
    else:
        anomaly = _anomaly_from_args(args)
    sizes = _parse_sizes(args.n_list)
    out = _require_out(args.out)
    if args.fits_out:
        fits_out = _require_out(args.fits_out)
    else:
        fits_out = out.with_name(out.stem + "-fits" + out.suffix)
    sweep = perturbation_sweep(anomaly, sizes,
                               max_workers=_worker_cap(len(sizes)))
    write_shifts_csv(sweep.samples, out)
    write_fits_csv(sweep.fits, fits_out)
    for fit in sweep.fits:
        if fit.below_floor:
            print(f"branch={fit.branch_theta0:.6f} below-floor "
                  f"excluded={fit.excluded}")
        else:
            print(f"branch={fit.branch_theta0:.6f} slope={fit.slope:.4f} "
                  f"r2={fit.r_squared:.6f}")
    return 0


def _cmd_sweep(args) -> int:
    graph = _load_graph(args.spec)
    kind = _parse_kind(args)
    sizes = _parse_sizes(args.n_list)
    out = _require_out(args.out)

    def one(n: int):
        sized = build_star(n, graph.anomaly)
        steps = args.max_steps if args.max_steps else _default_steps(sized)
        return n, run_search(sized, kind, steps, method=args.method)

    workers = _worker_cap(len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, sizes))
    else:
        rows = [one(n) for n in sizes]
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("N,predicted_step,peak_step,peak_detectable,peak_undetected\n")
        for n, res in rows:
            pred = "" if res.predicted_step is None else res.predicted_step
            fh.write(f"{n},{pred},{res.peak_step},"
                     f"{res.peak_detectable:.12g},{res.peak_undetected:.12g}\n")
    return 0


def _cmd_baseline(args) -> int:
    graph = _load_graph(args.spec)
    stats = baseline_statistics(graph, args.trials, args.seed)
    try:
        predicted = predicted_hitting_step(graph)
    except NoPredictionError:
        predicted = None
    ratio = predicted / stats.mean if predicted is not None and stats.mean else None
    payload = {
        "n_spokes": graph.n_spokes,
        "anomaly": graph.anomaly.variant,
        "trials": stats.trials,
        "seed": args.seed,
        "mean_queries": stats.mean,
        "std_queries": stats.std,
        "expected_mean": stats.expected_mean,
        "predicted_quantum_step": predicted,
        "quantum_classical_ratio": ratio,
    }
    _emit_json(payload, _require_out(args.out) if args.out else None)
    return 0


def _add_spec(p) -> None:
    p.add_argument("--spec", required=True,
                   help="graph spec file path, or an inline JSON object")


def _add_kind(p, default: str = "minus") -> None:
    p.add_argument("--kind", choices=list(_KIND_NAMES), default=default,
                   help=f"start-state kind (default {default})")
    p.add_argument("--amp-out", default=None,
                   help="outgoing coefficient for --kind inout (complex literal)")
    p.add_argument("--amp-in", default=None,
                   help="incoming coefficient for --kind inout")


def _add_method(p, default: str) -> None:
    p.add_argument("--method", choices=["full", "reduced"], default=default,
                   help=f"evolution path (default {default})")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anomalywalk",
                     description="Quantum walks on star graphs with "
                                 "structural anomalies.")
    sub = parser.add_subparsers(dest="verb", metavar="verb")

    p = sub.add_parser("check", help="validate a spec and certify unitarity")
    _add_spec(p)
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("evolve", help="write the per-step probability CSV")
    _add_spec(p)
    _add_kind(p)
    p.add_argument("--steps", type=int, default=None,
                   help="number of steps (default scales with sqrt(N))")
    _add_method(p, "full")
    p.add_argument("--out", required=True, help="per-step CSV path")
    p.set_defaults(handler=_cmd_evolve)

    p = sub.add_parser("search", help="run one search and summarize it")
    _add_spec(p)
    _add_kind(p)
    p.add_argument("--max-steps", type=int, default=None,
                   help="evolution horizon (default scales with sqrt(N))")
    _add_method(p, "full")
    p.add_argument("--out", default=None,
                   help="summary JSON path (stdout when omitted); the "
                        "per-step CSV lands next to it as <stem>.steps.csv")
    p.add_argument("--per-step-out", default=None,
                   help="explicit per-step CSV path")
    p.set_defaults(handler=_cmd_search)

    p = sub.add_parser("spectrum",
                       help="eigenphases of the reduced walk operator")
    _add_spec(p)
    _add_kind(p)
    p.add_argument("--out", required=True, help="spectrum CSV path")
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("perturb",
                       help="eigenphase shifts against the infinite-size limit")
    p.add_argument("--spec", default=None,
                   help="take the anomaly from this spec (its size is ignored)")
    p.add_argument("--anomaly", choices=list(_ANOMALY_NAMES), default=None,
                   help="anomaly variant, placed at the default location")
    p.add_argument("--at", type=int, default=1, help="anomaly vertex (default 1)")
    p.add_argument("--u", type=int, default=1, help="extra-edge endpoint (default 1)")
    p.add_argument("--v", type=int, default=2, help="extra-edge endpoint (default 2)")
    p.add_argument("--phase-num", type=int, default=None,
                   help="marking phase numerator, units of pi")
    p.add_argument("--phase-den", type=int, default=None,
                   help="marking phase denominator, units of pi")
    p.add_argument("--phase-rad", type=float, default=None,
                   help="marking phase in radians")
    p.add_argument("--n-list", default=None,
                   help="comma-separated sizes (default 64..4096 powers of two)")
    p.add_argument("--out", required=True, help="shift CSV path")
    p.add_argument("--fits-out", default=None,
                   help="fit CSV path (default <out stem>-fits<ext>)")
    p.set_defaults(handler=_cmd_perturb)

    p = sub.add_parser("sweep", help="peak steps across a list of sizes")
    _add_spec(p)
    _add_kind(p)
    p.add_argument("--n-list", default=None,
                   help="comma-separated sizes (default 64..4096 powers of two)")
    p.add_argument("--max-steps", type=int, default=None,
                   help="fixed horizon for every size (default per-size sqrt rule)")
    _add_method(p, "reduced")
    p.add_argument("--out", required=True, help="peak-step CSV path")
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("baseline", help="classical adjacency-list statistics")
    _add_spec(p)
    p.add_argument("--trials", type=int, default=10000,
                   help="number of Monte Carlo shuffles (default 10000)")
    p.add_argument("--seed", type=int, default=0,
                   help="random seed (default 0)")
    p.add_argument("--out", default=None,
                   help="statistics JSON path (stdout when omitted)")
    p.set_defaults(handler=_cmd_baseline)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not hasattr(args, "handler"):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.handler(args)
    except AnomalyWalkError as exc:
        print(f"error:{exc.category}:{exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error:io:{exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
