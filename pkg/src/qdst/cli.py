"""Command-line entry point: ``qdst combine|circuit|train|predict|eval``.

Data goes to ``--out`` or standard output; diagnostics go to standard error.
Every random choice is derived from ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from . import circuit as qc
from .classifier import (
    Backend,
    ClassifierModel,
    DatasetError,
    classify,
    evaluate,
    read_dataset,
    train,
)
from .dst import (
    DSTError,
    MassFunction,
    TotalConflictError,
    combine_rule,
    load_mass,
    mass_to_json,
    set_of_index,
)
from .rules import And, Or, RuleSyntaxError, UnboundVariableError, Var, lower, parse, pretty

log = logging.getLogger("qdst")


class UsageError(Exception):
    pass


def expand_rule(text: str, p: int):
    """Parse a rule; a bare ``&`` or ``|`` means that operator over ``m1..mp``."""
    bare = text.strip()
    if bare in ("&", "|"):
        if p < 1:
            raise UsageError(f"rule {bare!r} needs at least one mass")
        names = tuple(Var(f"m{r + 1}") for r in range(p))
        if p == 1:
            return names[0]
        return And(names) if bare == "&" else Or(names)
    return parse(text)


def parse_fractions(text: str) -> list[float]:
    """``a:b:step`` (inclusive of ``b``) or a comma list."""
    if ":" in text:
        try:
            a, b, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise UsageError(f"--fractions expects a:b:step, got {text!r}") from None
        if step <= 0 or b < a:
            raise UsageError(f"bad fraction range {text!r}")
        count = int(round((b - a) / step)) + 1
        return [round(a + i * step, 10) for i in range(count)]
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad fraction list {text!r}") from None


def _backend(args) -> Backend:
    return Backend(args.backend, args.shots)


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_combine(args) -> None:
    masses = [load_mass(path) for path in args.mass]
    if not masses:
        raise UsageError("at least one --mass file is required")
    names = {f"m{r + 1}": m for r, m in enumerate(masses)}
    rule = expand_rule(args.rule, len(masses))
    frame = masses[0].frame
    actual = combine_rule(rule, names)
    plan = lower(rule)
    circuit = qc.build_rule_circuit(plan, [qc.prepare_tree(names[v]) for v in plan.inputs])
    dist = qc.output_distribution(circuit)
    if args.backend == "shots":
        dist = qc.sample(dist, args.shots, np.random.default_rng(args.seed)).frequencies
    simulated = MassFunction(frame, dist)
    if args.out:
        with open(args.out, "w") as f:
            json.dump(mass_to_json(simulated), f, indent=2)
            f.write("\n")

    rows = []
    for i in range(frame.size):
        label = "{" + ",".join(e for e in frame.elements if e in set_of_index(frame, i)) + "}"
        sim, act = float(simulated.values[i]), float(actual.values[i])
        rows.append((label, sim, act, sim - act))
    if args.format == "json":
        doc = {
            "rule": pretty(rule),
            "backend": args.backend,
            "shots": args.shots if args.backend == "shots" else None,
            "seed": args.seed,
            "rows": [dict(zip(("focal_set", "simulated", "actual", "error"), r)) for r in rows],
        }
        text = json.dumps(doc, indent=2) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["focal_set", "simulated", "actual", "error"])
        w.writerows([label, repr(s), repr(a), repr(e)] for label, s, a, e in rows)
        text = buf.getvalue()
    else:
        lines = [f"rule: {pretty(rule)}  backend: {args.backend}"]
        lines.append(f"{'focal set':<16}{'simulated':>12}{'actual':>12}{'error':>12}")
        lines += [f"{label:<16}{s:>12.6f}{a:>12.6f}{e:>12.2e}" for label, s, a, e in rows]
        text = "\n".join(lines) + "\n"
    sys.stdout.write(text)


def cmd_circuit(args) -> None:
    text = args.rule.strip()
    if text in ("&", "|") and args.p is None:
        raise UsageError("a bare operator rule needs --p")
    rule = expand_rule(text, args.p or 0)
    plan = lower(rule)
    if args.p is not None and args.p < len(plan.inputs):
        raise UsageError(f"rule uses {len(plan.inputs)} masses, more than --p {args.p}")
    circuit = qc.compile_plan(plan, args.n)
    report = qc.resources(circuit)
    if args.format == "json":
        doc = {
            "rule": pretty(rule),
            "inputs": list(plan.inputs),
            "output_register": [circuit.output.start, circuit.output.stop],
            "gates": circuit.dump().splitlines(),
            "resources": report.as_dict(),
        }
        out = json.dumps(doc, indent=2) + "\n"
    else:
        lines = [f"# rule: {pretty(rule)}", f"# inputs: {', '.join(plan.inputs)}"]
        lines += [circuit.dump()] if circuit.gates else []
        lines.append(f"# width: {report.width}")
        lines.append(f"# output: qubits {circuit.output.start}..{circuit.output.stop - 1}")
        lines += [f"# {k}: {v}" for k, v in report.counts.items()]
        out = "\n".join(lines) + "\n"
    _emit(out, args.out)


def cmd_train(args) -> None:
    data = read_dataset(args.data)
    model = train(data.X, data.y, args.components, frame=data.classes,
                  attributes=data.attributes, backend=_backend(args))
    text = json.dumps(model.to_json(), indent=2) + "\n"
    _emit(text, args.out)
    log.info("trained %d mixtures on %d samples", len(data.attributes) * data.classes.n, len(data))


def cmd_predict(args) -> None:
    model = ClassifierModel.load(args.model)
    if args.backend is not None:
        model = ClassifierModel(model.frame, model.attributes, model.grid,
                                model.n_components, _backend(args))
    data = read_dataset(args.data)
    if data.attributes != model.attributes:
        raise UsageError(f"dataset attributes {data.attributes} differ from model {model.attributes}")
    for label in data.classes.elements:
        if label not in model.frame.elements:
            raise UsageError(f"class {label!r} in {args.data} is unknown to the model")
    rng = np.random.default_rng(args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "label", "predicted"] + [f"betp_{c}" for c in model.frame.elements])
    for row, (x, label) in enumerate(zip(data.X, data.y)):
        try:
            pred = classify(model, x, rng)
        except TotalConflictError:
            log.warning("row %d: attributes conflict totally; no prediction", row)
            w.writerow([row, label, ""] + ["nan"] * model.frame.n)
            continue
        w.writerow([row, label, pred.label] + [repr(float(p)) for p in pred.pignistic.probs])
    _emit(buf.getvalue(), args.out)


def cmd_eval(args) -> None:
    data = read_dataset(args.data)
    fractions = parse_fractions(args.fractions)
    report = evaluate(data, fractions, args.repeats, args.components, _backend(args), args.seed)
    buf = io.StringIO()
    report.write_csv(buf)
    _emit(buf.getvalue(), args.out)
    for s in report.summary():
        log.info("fraction %.2f: mean accuracy %.4f (std %.4f, %d repeats)",
                 s.fraction, s.mean, s.std, s.repeats)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdst", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def backend_flags(p, default="exact"):
        p.add_argument("--backend", choices=("exact", "shots"), default=default)
        p.add_argument("--shots", type=int, default=1024)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("combine", help="combine mass files under a rule")
    p.add_argument("--rule", required=True, help='rule text, or a bare "&" / "|" over all masses')
    p.add_argument("--mass", action="append", default=[], help="mass JSON file; named m1, m2, ...")
    backend_flags(p)
    p.add_argument("--out", help="write the simulated combined mass here (JSON)")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("circuit", help="print the compiled fusion circuit of a rule")
    p.add_argument("--rule", required=True)
    p.add_argument("--n", type=int, required=True, help="frame size (qubits per register)")
    p.add_argument("--p", type=int, help="number of masses (needed for a bare operator rule)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("train", help="fit the per-(attribute, class) mixtures")
    p.add_argument("--data", required=True, help="CSV: header, attribute columns, class column")
    p.add_argument("--components", type=int, default=3)
    backend_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify every row of a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    backend_flags(p, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy over seeded train/test splits")
    p.add_argument("--data", required=True)
    p.add_argument("--fractions", default="0.3:0.9:0.1")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--components", type=int, default=3)
    backend_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except (UsageError, DSTError, DatasetError, RuleSyntaxError, qc.CircuitError,
            ValueError, OSError) as exc:
        print(f"qdst {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except UnboundVariableError as exc:
        print(f"qdst {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
