"""Command-line interface.

Exit codes: 0 success, 1 domain error, 2 usage error.  Relative output paths
are resolved against ``$TURING_TRANSFORMER_OUTPUT_DIR`` when it is set.

CSV schemas
  simulate       step,agreement,distance,saturations,layer_deviation,layer_error_bound,writes,hamming
  verify         same as simulate
  sweep-quant    Q,first_disagreement_step,censored,first_saturation,max_deviation,max_bound,bound_holds
  rounds         round,distance_coord,distance_hamming,budget,within_budget
  bounds         R,m,capacity_term,mixed_term,confidence_term
  optimal-rounds R,m
  propagate      i,Lambda,kappa,Lambda_modified   (ledger mode)
                 R,bound                          (--R-list mode)
  rademacher     n,functions,trials,seed,estimate,stderr,closed_form
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, machines, propagation
from .compiler import compile_machine, dump_weights, simulate
from .errors import TuringTransformerError
from .layer import QuantizationConfig
from .rounds import induction_audit, plan_rounds, run_rounds
from .sweep import fit_growth, is_monotone, sweep_csv, sweep_quantization
from .tm import parse_spec_file

DEFAULT_SEED = 20240229
OUTPUT_DIR_ENV = "TURING_TRANSFORMER_OUTPUT_DIR"
DEFAULT_C = QuantizationConfig.dynamic_range


def fmt(x):
    return "%.17g" % x


def csv_text(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    wr.writerows(rows)
    return buf.getvalue()


def load_tm(ref):
    """A bundled machine name or a path to a spec file."""
    if ref in machines.SOURCES:
        return machines.load(ref)
    return parse_spec_file(ref)


def default_input(ref):
    return machines.LONG_INPUTS.get(ref, "")


def _emit(args, text):
    if args.output:
        path = Path(args.output)
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base and not path.is_absolute():
            path = Path(base) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _info(msg):
    print(msg, file=sys.stderr)


def _qc(args):
    return QuantizationConfig(args.q, args.c) if args.q else QuantizationConfig(None, args.c)


def _input(args):
    return default_input(args.tm) if args.input is None else args.input


# --- machine commands --------------------------------------------------------


def cmd_compile(args):
    program = compile_machine(load_tm(args.tm), args.k)
    _emit(args, dump_weights(program))
    _info(f"d={program.layout.d} hidden={program.hidden} transitions={program.n_trans}")
    return 0


def cmd_simulate(args):
    program = compile_machine(load_tm(args.tm), args.k, _qc(args))
    trace = simulate(program, _input(args), args.steps)
    _emit(args, trace.to_csv())
    if trace.final is not None:
        _info(f"state={trace.final.state} tape={trace.final.tape_string(program.spec.blank)}")
    return 0


def cmd_verify(args):
    program = compile_machine(load_tm(args.tm), args.k, _qc(args))
    trace = simulate(program, _input(args), args.steps)
    _emit(args, trace.to_csv())
    first = trace.first_disagreement
    steps = len(trace.records) - 1
    if first is None:
        print(f"all agree: {steps} steps, 0 mismatches")
        return 0
    print(f"disagreement at step {first}")
    return 1


def cmd_sweep(args):
    spec = load_tm(args.tm)
    rows = sweep_quantization(spec, _input(args), args.k, args.steps, args.levels, args.c)
    _emit(args, sweep_csv(rows))
    _info(f"monotone={is_monotone(rows)}")
    for f in fit_growth(rows):
        _info(f"fit {f.model}: slope={fmt(f.slope)} intercept={fmt(f.intercept)} r2={fmt(f.r2)}")
    return 0


def cmd_rounds(args):
    program = compile_machine(load_tm(args.tm), args.k, _qc(args))
    plan = plan_rounds(args.T, args.s, args.eps)
    trace = run_rounds(program, _input(args), plan)
    _emit(args, trace.to_csv())
    audit = induction_audit(trace, plan)
    _info(f"R={plan.rounds} budget_per_round={fmt(plan.budget_per_round)} "
          f"audit={'pass' if audit.passed else 'fail'} first_violation={audit.first_violation}")
    return 0


# --- bounds ------------------------------------------------------------------

PRESETS = {"unit": {}}


def _capacity(args):
    params = dict(PRESETS[args.preset]) if args.preset else {}
    for name in ("b_spec", "l_phi", "l_max", "r_x", "k", "loss_lipschitz", "loss_bound"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    return bounds.ModelCapacity(**params)


def cmd_bounds(args):
    cap = _capacity(args)
    rows = []
    if args.T is None:
        m, t = bounds.sample_complexity_next_token(cap, args.eps, args.delta)
        rows.append(["", m, t])
    else:
        Rs = [args.R] if args.R is not None else range(1, args.T + 1)
        for R in Rs:
            m, t = bounds.sample_complexity_multiround(cap, args.eps, args.delta, args.T, R,
                                                       terms=True)
            rows.append([R, m, t])
    _emit(args, csv_text(["R", "m", "capacity_term", "mixed_term", "confidence_term"],
                         [[R, fmt(m), fmt(t.capacity), fmt(t.mixed), fmt(t.confidence)]
                          for R, m, t in rows]))
    if args.output:
        for R, m, t in rows:
            print(f"R={R or '-':>4}  m={m:<24.17g} capacity={t.capacity:.6g} "
                  f"mixed={t.mixed:.6g} confidence={t.confidence:.6g}")
    return 0


def cmd_optimal_rounds(args):
    cap = _capacity(args)
    best = bounds.optimal_rounds(cap, args.eps, args.delta, args.T)
    m = bounds.sample_complexity_multiround(cap, args.eps, args.delta, args.T, best)
    _emit(args, csv_text(["R", "m"], [[best, fmt(m)]]))
    return 0


def cmd_rademacher(args):
    rng = np.random.default_rng(args.seed)
    X = rng.standard_normal((args.n, args.dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    W = rng.standard_normal((args.functions, args.dim))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    est, se = bounds.empirical_rademacher(bounds.linear_class_table(X, W), args.trials,
                                          args.seed)
    closed = bounds.rademacher_bound(bounds.ModelCapacity(), args.n)
    _emit(args, csv_text(["n", "functions", "trials", "seed", "estimate", "stderr",
                          "closed_form"],
                         [[args.n, args.functions, args.trials, args.seed,
                           fmt(est), fmt(se), fmt(closed)]]))
    return 0


# --- propagation -------------------------------------------------------------


def read_ledger(path):
    """Rows ``r gamma lambda empirical slack``; the first row's gamma is ignored."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if parts[0] == "r":
            continue
        if len(parts) != 5:
            raise propagation.InvalidLedger(f"line {lineno}: expected 5 columns")
        rows.append(parts)
    rows.sort(key=lambda p: int(p[0]))
    if [int(p[0]) for p in rows] != list(range(1, len(rows) + 1)):
        raise propagation.InvalidLedger("rounds must be numbered 1..R")
    return propagation.ErrorLedger(
        gamma=[float(p[1]) for p in rows[1:]],
        lam=[float(p[2]) for p in rows],
        empirical=[float(p[3]) for p in rows],
        slack=[float(p[4]) for p in rows],
    )


def read_plan(path):
    """``hints: 2 3`` and ``gamma_prime: 0.25`` lines."""
    fields = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, _, value = line.partition(":")
            fields[key.strip()] = value.replace(",", " ").split()
    try:
        return propagation.InterventionPlan(
            frozenset(int(h) for h in fields.get("hints", [])),
            float(fields["gamma_prime"][0]))
    except (KeyError, IndexError):
        raise propagation.InvalidLedger("plan file needs a gamma_prime line") from None


def cmd_propagate(args):
    if args.R_list:
        if None in (args.gamma, args.lam, args.eta):
            raise SystemExit("propagate --R-list needs --gamma, --lam and --eta")
        scan = propagation.divergence_scan(args.gamma, args.lam, args.eta, args.R_list)
        _emit(args, csv_text(["R", "bound"], [[r, fmt(b)] for r, b in zip(scan.R, scan.bounds)]))
        _info(f"slope={fmt(scan.slope)} asymptotic={fmt(scan.asymptotic_slope)}")
        return 0
    if not args.ledger:
        raise SystemExit("propagate needs --ledger or --R-list")
    ledger = read_ledger(args.ledger)
    if args.plan:
        res = propagation.intervention(ledger, read_plan(args.plan))
        lam, kappa = res.Lambda, res.kappa
        summary = f"bound={fmt(res.bound)} delta_L={fmt(res.delta_L)} modified={fmt(res.modified_bound)}"
    else:
        cb = propagation.cumulative_bound(ledger)
        lam, kappa = cb.Lambda, np.ones(ledger.R)
        summary = f"bound={fmt(cb.bound)}"
    _emit(args, csv_text(["i", "Lambda", "kappa", "Lambda_modified"],
                         [[i, fmt(l), fmt(k), fmt(l * k)]
                          for i, (l, k) in enumerate(zip(lam, kappa), start=1)]))
    _info(summary)
    return 0


# --- parser ------------------------------------------------------------------


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _odd(text):
    v = _positive_int(text)
    if v % 2 == 0:
        raise argparse.ArgumentTypeError("window size must be odd")
    return v


def _positive(text):
    v = float(text)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _probability(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def build_parser():
    parser = argparse.ArgumentParser(
        prog="turing-transformer",
        description="Compile Turing machines into transformer layers and evaluate bounds.",
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tm=True):
        p.add_argument("-o", "--output", help="write the main artifact here instead of stdout")
        if tm:
            p.add_argument("--tm", required=True,
                           help=f"spec file or bundled name ({', '.join(machines.SOURCES)})")
            p.add_argument("--k", type=_odd, default=3, help="window size (odd)")

    def machine(p, steps=100):
        p.add_argument("--input", help="input string (default: bundled long input)")
        p.add_argument("--steps", type=_nonneg_int, default=steps)
        p.add_argument("--q", type=int, help="quantization levels (default: exact)")
        p.add_argument("--c", type=_positive, default=DEFAULT_C, help="dynamic range")

    p = sub.add_parser("compile", help="dump compiled weights")
    common(p)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", help="per-step trace CSV")
    common(p)
    machine(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="compare against the reference interpreter")
    common(p)
    machine(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep-quant", help="first disagreement step per Q")
    common(p)
    p.add_argument("--input")
    p.add_argument("--steps", type=_nonneg_int, default=100)
    p.add_argument("--q", dest="levels", type=_int_list,
                   default=[2 ** e for e in range(4, 17, 2)])
    p.add_argument("--c", type=_positive, default=DEFAULT_C)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rounds", help="multi-round run with per-round budgets")
    common(p)
    p.add_argument("--input")
    p.add_argument("--T", type=_positive_int, required=True)
    p.add_argument("--s", type=_positive_int, required=True)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--q", type=int)
    p.add_argument("--c", type=_positive, default=DEFAULT_C)
    p.set_defaults(func=cmd_rounds)

    def capacity(p):
        p.add_argument("--preset", choices=sorted(PRESETS))
        p.add_argument("--b-spec", dest="b_spec", type=_positive)
        p.add_argument("--l-phi", dest="l_phi", type=_positive)
        p.add_argument("--l-max", dest="l_max", type=_positive_int)
        p.add_argument("--r-x", dest="r_x", type=_positive)
        p.add_argument("--k", type=_positive)
        p.add_argument("--loss-lipschitz", dest="loss_lipschitz", type=_positive)
        p.add_argument("--loss-bound", dest="loss_bound", type=_positive)
        p.add_argument("--eps", type=_positive, required=True)
        p.add_argument("--delta", type=_probability, required=True)

    p = sub.add_parser("bounds", help="sample-complexity bounds")
    common(p, tm=False)
    capacity(p)
    p.add_argument("--T", type=_positive_int)
    p.add_argument("--R", type=_positive_int)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("optimal-rounds", help="round count minimising the multi-round bound")
    common(p, tm=False)
    capacity(p)
    p.add_argument("--T", type=_positive_int, required=True)
    p.set_defaults(func=cmd_optimal_rounds)

    p = sub.add_parser("propagate", help="cumulative error bounds and interventions")
    common(p, tm=False)
    p.add_argument("--ledger", help="rows: r gamma lambda empirical slack")
    p.add_argument("--plan", help="lines 'hints: ...' and 'gamma_prime: ...'")
    p.add_argument("--gamma", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--R-list", dest="R_list", type=_int_list)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("rademacher", help="Monte-Carlo Rademacher complexity of a linear class")
    common(p, tm=False)
    p.add_argument("--n", type=_positive_int, default=100)
    p.add_argument("--dim", type=_positive_int, default=5)
    p.add_argument("--functions", type=_positive_int, default=64)
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_rademacher)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            parser.error(exc.code)
        raise
    except TuringTransformerError as exc:
        print(f"error [{exc.module}]: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
