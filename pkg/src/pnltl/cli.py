"""Command-line front end.

``pnltl check --net model.pnml --formula props.ltl`` checks every formula
of a file (or one inline formula) and prints one line per formula.
``pnltl bench`` runs each formula under the ORI/DYN/DRW/HBA toggle matrix
and writes a TSV table of times, memory and explored states.

Exit codes: 0 when every formula is decided, 1 when at least one hit a
resource limit or could not be handled, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence, TextIO

from pnltl.buchi import DEFAULT_COEFFICIENT, build_automaton
from pnltl.codec import Scheme, plan_encoding
from pnltl.explore import GIB, Options, Status, Verdict, check, prepare
from pnltl.ltl import Formula, LtlSyntaxError, ResolutionError, bind, parse_formula_file, parse_ltl
from pnltl.petri import PetriNet, PnmlError, parse_pnml

ENCODINGS = {
    "auto": None,
    "default": Scheme.DEFAULT16,
    "safe": Scheme.ONE_SAFE,
    "nupn": Scheme.NUPN,
    "pinv": Scheme.PINVARIANT,
}

MACHINE_KEYS = ("verdict", "states", "product-states", "rounds", "peak-bound",
                "wall-seconds", "peak-resident-bytes")

BENCH_CONFIGS = {
    "ORI": dict(dyn=False, drw=False, hba=False),
    "DYN": dict(dyn=True, drw=False, hba=False),
    "DRW": dict(dyn=False, drw=True, hba=False),
    "HBA": dict(dyn=False, drw=False, hba=True),
}

BENCH_HEADER = (
    "net", "formula", "verdict",
    "T_ORI", "M_ORI", "N_ORI",
    "T_DYN", "M_DYN", "T_DRW", "M_DRW",
    "T_HBA", "M_HBA", "N_HBA",
    "dT1", "dM1", "dT2", "dM2", "dN", "dT3", "dM3",
    "timeouts",
)


class UsageError(Exception):
    pass


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _common_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--net", required=True, help="PNML file")
    parser.add_argument("--formula", required=True,
                        help="formula file (one per line, '#' comments) or an inline formula")
    parser.add_argument("--encoding", choices=sorted(ENCODINGS), default="auto")
    parser.add_argument("--coef", type=float, default=DEFAULT_COEFFICIENT,
                        help="heuristic coefficient (default %(default)s)")
    parser.add_argument("--bound", type=int, default=10_000,
                        help="first depth bound; 0 searches without a bound")
    parser.add_argument("--growth", type=int, default=10, help="bound growth factor per round")
    parser.add_argument("--timeout", type=float, default=300.0, help="seconds per formula")
    parser.add_argument("--memory", type=int, default=16 * GIB, help="memory cap in bytes")
    parser.add_argument("-v", "--verbose", action="store_true")


def _check_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pnltl", description="LTL model checking of P/T nets")
    _common_args(p)
    p.add_argument("--dyn", type=_on_off, default=True, metavar="on|off", help="dynamic fireset")
    p.add_argument("--drw", type=_on_off, default=True, metavar="on|off", help="direct field access")
    p.add_argument("--hba", type=_on_off, default=True, metavar="on|off", help="heuristic ordering")
    p.add_argument("--output", choices=("human", "machine"), default="human")
    p.add_argument("--dump-layout", action="store_true", help="print the encoding layout as TSV")
    p.add_argument("--dump-buchi", action="store_true", help="print the automaton of each negated formula")
    return p


def _bench_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pnltl bench", description="optimisation A/B table")
    _common_args(p)
    p.add_argument("--out", help="TSV destination (default: standard output)")
    return p


def _parse(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    try:
        return parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags and 0 on --help
        raise UsageError() if exc.code else exc


def load_inputs(net_path: str, formula_arg: str) -> tuple[PetriNet, list[tuple[str, Formula]]]:
    """Read the net and the formulas, binding names to indices."""
    try:
        with open(net_path, "rb") as fh:
            net = parse_pnml(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read net: {exc}") from exc
    except PnmlError as exc:
        raise UsageError(f"{net_path}: {exc}") from exc
    try:
        if os.path.isfile(formula_arg):
            with open(formula_arg, encoding="utf-8") as fh:
                text = fh.read()
            lines = text.splitlines()
            parsed = [(lines[n - 1].strip(), f) for n, f in parse_formula_file(text)]
        else:
            parsed = [(formula_arg.strip(), parse_ltl(formula_arg))]
        return net, [(src, bind(f, net)) for src, f in parsed]
    except OSError as exc:
        raise UsageError(f"cannot read formulas: {exc}") from exc
    except (LtlSyntaxError, ResolutionError) as exc:
        raise UsageError(f"formula: {exc}") from exc


def _options(args: argparse.Namespace, **toggles) -> Options:
    return Options(
        encoding=ENCODINGS[args.encoding],
        coefficient=args.coef,
        bound=args.bound,
        growth=args.growth,
        timeout=args.timeout,
        memory_cap=args.memory,
        **toggles,
    )


def machine_record(index: int, verdict: Verdict) -> dict:
    s = verdict.stats
    return {
        "index": index,
        "verdict": verdict.status.value,
        "states": s.states,
        "product-states": s.product_states,
        "rounds": s.rounds,
        "peak-bound": s.peak_bound,
        "wall-seconds": round(s.wall_seconds, 6),
        "peak-resident-bytes": s.peak_bytes,
    }


def _human(index: int, source: str, net: PetriNet, verdict: Verdict, out: TextIO) -> None:
    s = verdict.stats
    line = (f"[{index}] {verdict.status.value}: {source}  "
            f"(states={s.states}, product={s.product_states}, rounds={s.rounds}, "
            f"{s.wall_seconds:.3f}s)")
    if verdict.reason:
        line += f"  reason: {verdict.reason}"
    print(line, file=out)
    if verdict.run is not None:
        prefix, cycle = verdict.run.transitions(net)
        print(f"    prefix: {' '.join(prefix) or '(empty)'}", file=out)
        print(f"    cycle:  {' '.join(cycle)}", file=out)


def main(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout, err: TextIO = sys.stderr) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "bench":
        return bench(argv[1:], out, err)
    if argv and argv[0] == "check":
        argv = argv[1:]
    try:
        args = _parse(_check_parser(), argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=err)
        net, formulas = load_inputs(args.net, args.formula)
    except UsageError as exc:
        if exc.args:
            print(f"error: {exc}", file=err)
        return 2
    options = _options(args, dyn=args.dyn, drw=args.drw, hba=args.hba)
    if args.dump_layout:
        try:
            print(plan_encoding(net, options.encoding).layout_tsv(net), end="", file=out)
        except ValueError as exc:
            print(f"error: {exc}", file=err)
            return 2
    code = 0
    for i, (source, formula) in enumerate(formulas):
        if args.dump_buchi:
            automaton = build_automaton(prepare(formula, net, options), options.coefficient, options.simplify)
            print(f"# automaton for !({source})", file=out)
            print(automaton.dump(), file=out)
        verdict = check(net, formula, options)
        if args.output == "machine":
            print(json.dumps(machine_record(i, verdict)), file=out)
        else:
            _human(i, source, net, verdict, out)
        if not verdict.decided:
            code = 1
    return code


def _ratio(a: float, b: float) -> str:
    if b == 0:
        return "inf" if a else "nan"
    return f"{a / b:.2f}"


def bench_row(net: PetriNet, source: str, formula: Formula, base: argparse.Namespace) -> list[str]:
    """One TSV row: every configuration of the matrix on one formula."""
    runs: dict[str, Verdict] = {}
    for name, toggles in BENCH_CONFIGS.items():
        runs[name] = check(net, formula, _options(base, **toggles))
    timeouts = [n for n, v in runs.items() if v.status is Status.RESOURCE_LIMIT]
    T, M, N = {}, {}, {}
    for name, v in runs.items():
        # a run that hit the limit is charged the full limit;
        # ratios use the printed (rounded) times so the table is self-consistent
        T[name] = round(base.timeout if name in timeouts else v.stats.wall_seconds, 4)
        M[name] = v.stats.peak_bytes
        N[name] = v.stats.product_states
    decided = {v.status.value for v in runs.values() if v.decided}
    verdict = decided.pop() if len(decided) == 1 else ("mixed" if decided else runs["ORI"].status.value)
    row = [net.name, source, verdict,
           f"{T['ORI']:.4f}", str(M["ORI"]), str(N["ORI"]),
           f"{T['DYN']:.4f}", str(M["DYN"]), f"{T['DRW']:.4f}", str(M["DRW"]),
           f"{T['HBA']:.4f}", str(M["HBA"]), str(N["HBA"]),
           _ratio(T["ORI"], T["DYN"]), _ratio(M["ORI"], M["DYN"]),
           _ratio(T["ORI"], T["DRW"]), _ratio(M["ORI"], M["DRW"]),
           _ratio(N["ORI"], N["HBA"]),
           _ratio(T["ORI"], T["HBA"]), _ratio(M["ORI"], M["HBA"]),
           ",".join(timeouts) or "-"]
    return row


def bench(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout, err: TextIO = sys.stderr) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(_bench_parser(), argv)
        net, formulas = load_inputs(args.net, args.formula)
    except UsageError as exc:
        if exc.args:
            print(f"error: {exc}", file=err)
        return 2
    rows = ["\t".join(BENCH_HEADER)]
    code = 0
    for source, formula in formulas:
        row = bench_row(net, source.replace("\t", " "), formula, args)
        if row[2] not in ("holds", "violated"):
            code = 1
        rows.append("\t".join(row))
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
