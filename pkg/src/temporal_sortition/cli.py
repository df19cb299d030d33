"""Command-line entry point: ``tsort gen | run | audit | compose``.

Exit codes: 0 success, 1 audit violation, 2 input error, 3 configuration
(divisibility) error.  Output files default to ``$TSORT_OUT_DIR`` (or the
current directory).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import audit as audit_mod
from .chain import chain_based_representation
from .errors import ConfigurationError, InputError, InvariantViolation, StructuralError
from .federated import composition_audit, federated_pipeline
from .instances import FIXTURES, KINDS, fixture, generate, load_spec
from .metric import Instance
from .nested import nested_based_representation
from .sequence import PanelSequence, to_plain

OUT_DIR_ENV = "TSORT_OUT_DIR"
EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2, 3


def default_out(name: str) -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / name


def write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_plain(data), indent=2) + "\n")


def resolve_instance(ref: str) -> Instance:
    """A path to an instance JSON file, or a fixture name."""
    if Path(ref).is_file():
        return Instance.load(ref)
    if ref in FIXTURES:
        return fixture(ref)
    raise InputError(f"{ref!r} is neither an instance file nor a fixture ({', '.join(sorted(FIXTURES))})")


def _ids(instance: Instance, members) -> str:
    return "{" + ", ".join(str(instance.ids[v]) for v in members) + "}"


# -- gen ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.fixture:
        inst = fixture(args.fixture)
    else:
        spec = load_spec(args.spec) if args.spec else {}
        for key in ("kind", "n", "weights", "separation", "spread", "dim", "seed"):
            val = getattr(args, key)
            if val is not None:
                spec[key] = val
        if "n" not in spec:
            raise InputError("--n (or a spec file) is required without --fixture")
        inst = generate(spec)
    out = Path(args.out) if args.out else default_out("instance.json")
    write_json(out, inst.to_json())
    print(f"wrote {inst.n}-individual instance to {out}")
    return EXIT_OK


# -- run ---------------------------------------------------------------------


def _uniform_size(args) -> tuple[int, int]:
    sizes = args.sizes
    if len(set(sizes)) != 1:
        raise InputError(f"{args.algo} needs equal panel sizes, got {sizes}")
    ell = args.panels if args.panels is not None else len(sizes)
    if len(sizes) not in (1, ell):
        raise InputError("give one size, or one size per panel")
    return ell, sizes[0]


def run_algorithm(instance: Instance, algo: str, sizes: list[int], panels: int | None, seed, strict: bool) -> PanelSequence:
    ns = argparse.Namespace(algo=algo, sizes=sizes, panels=panels)
    if algo == "chain":
        if panels is not None and len(sizes) == 1:
            sizes = sizes * panels
        elif panels is not None and len(sizes) != panels:
            raise InputError(f"--panels {panels} does not match {len(sizes)} sizes")
        return chain_based_representation(instance, sizes, seed, strict)
    ell, k = _uniform_size(ns)
    if algo == "nested":
        return nested_based_representation(instance, ell, k, seed, strict)
    if algo == "federated":
        return federated_pipeline(instance, ell, k, seed, strict)
    raise InputError(f"unknown algorithm {algo!r}")


def cmd_run(args) -> int:
    inst = resolve_instance(args.instance)
    seq = run_algorithm(inst, args.algo, args.sizes, args.panels, args.seed, not args.relaxed)
    out = Path(args.out) if args.out else default_out("sequence.json")
    write_json(out, seq.to_json(inst))
    print(f"{args.algo}: {seq.ell} panels, seed {seq.seed}")
    for t, panel in enumerate(seq.panels, 1):
        print(f"  P{t:<3} {_ids(inst, panel)}")
    prob = seq.selection_probability or []
    if prob:
        print(f"  selection probability: min {min(prob):.4g}, max {max(prob):.4g}")
    print(f"wrote {out}")
    return EXIT_OK


# -- audit -------------------------------------------------------------------


def parse_thresholds(text: str):
    """``auto``, ``none``, a single number, or ``level=value`` pairs."""
    if text in ("auto", "none"):
        return None if text == "none" else "auto"
    try:
        return float(text)
    except ValueError:
        pass
    out = {}
    for part in text.split(","):
        key, _, val = part.partition("=")
        level, _, t = key.strip().partition(":")
        if level not in audit_mod.LEVELS or not val:
            raise InputError(f"bad threshold {part!r}; use auto, a number, or level[:t]=value")
        try:
            out[(level, int(t)) if t else level] = float(val)
        except ValueError as exc:
            raise InputError(f"bad threshold {part!r}") from exc
    return out


def _print_report(inst: Instance, report: audit_mod.AuditReport) -> None:
    print(f"{'level':<8}{'t':>3}{'size':>6}{'factor':>12}{'threshold':>11}  {'method':<16}result")
    for row in report.rows:
        res = row.result
        thr = "-" if row.threshold is None else f"{row.threshold:g}"
        mark = "ok" if row.passed else "VIOLATION"
        print(f"{row.level:<8}{row.t:>3}{row.size:>6}{res.factor:>12.4g}{thr:>11}  {res.method:<16}{mark}")
        if not row.passed and res.witness is not None:
            w = res.witness
            print(f"    witness {_ids(inst, w.members)} radius {w.radius:g} nearest {w.nearest:g}")
    fb = report.fairness
    if fb is not None:
        status = "ok" if fb.passed else "FLAGGED"
        print(
            f"fairness: {fb.trials} trials, target {fb.target:.4g}, max deviation "
            f"{fb.max_abs_deviation:.4g} (3 sigma {fb.tolerance:.4g}) {status}"
        )
        if fb.structural.get("checked"):
            print(f"  structural partition into {fb.structural['parts']} parts: exact={fb.structural['exact']}")


def cmd_audit(args) -> int:
    inst = resolve_instance(args.instance)
    seq = PanelSequence.load(args.sequence, inst)
    levels = [lv.strip() for lv in args.levels.split(",") if lv.strip()]
    report = audit_mod.audit_sequence(
        inst, seq, levels, parse_thresholds(args.thresholds), args.axiom, args.prf_mode
    )
    if args.fairness_trials:
        if seq.algorithm not in ("nested", "chain", "federated"):
            raise InputError(f"cannot rerun sequences produced by {seq.algorithm!r}")
        report.fairness = audit_mod.fairness_audit(
            seq.algorithm, inst, seq.params, args.fairness_trials, args.seed, args.workers
        )
    out = Path(args.out) if args.out else default_out("report.json")
    write_json(out, report.to_json())
    with open(out.with_suffix(".csv"), "w", newline="") as fh:
        csv.writer(fh).writerows(report.csv_rows())
    _print_report(inst, report)
    print(f"wrote {out} and {out.with_suffix('.csv')}")
    return EXIT_OK if report.passed else EXIT_VIOLATION


# -- compose -----------------------------------------------------------------


def cmd_compose(args) -> int:
    inst = resolve_instance(args.instance)
    p1 = [inst.index_of(_as_id(inst, v)) for v in args.p1]
    p2 = [inst.index_of(_as_id(inst, v)) for v in args.p2]
    rep = composition_audit(inst, len(p1), len(p2), p1, p2, args.prf_mode)
    out = Path(args.out) if args.out else default_out("composition.json")
    write_json(out, rep.to_json())
    for name, res in (("alpha", rep.alpha), ("beta", rep.beta), ("gamma", rep.gamma)):
        print(f"{name:<6}{res.factor:>10.4g}  {res.method}")
    if rep.gamma.witness is not None:
        print(f"witness {'{' + ', '.join(map(str, rep.witness_ids)) + '}'}")
    if rep.divisible:
        print(f"bound 2*alpha*beta + beta = {rep.bound:.4g}: {'holds' if rep.holds else 'VIOLATED'}")
    else:
        print(f"k2={rep.k2} does not divide k1={rep.k1}; no bound applies")
    print(f"wrote {out}")
    return EXIT_VIOLATION if rep.holds is False else EXIT_OK


def _as_id(inst: Instance, text: str):
    """Match a command-line token against instance ids, which may be ints."""
    if text in inst._index:
        return text
    try:
        return int(text)
    except ValueError:
        return text


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsort", description="Temporal sortition: generate, run, audit.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write an instance JSON")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--fixture", choices=sorted(FIXTURES))
    src.add_argument("--spec", help="JSON file with kind, n, weights, separation, spread, seed")
    g.add_argument("--kind", choices=KINDS)
    g.add_argument("--n", type=int)
    g.add_argument("--weights", type=float, nargs="+")
    g.add_argument("--separation", type=float)
    g.add_argument("--spread", type=float)
    g.add_argument("--dim", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="draw a panel sequence")
    r.add_argument("--algo", required=True, choices=("nested", "chain", "federated"))
    r.add_argument("--instance", required=True, help="instance file or fixture name")
    r.add_argument("--panels", type=int, help="number of panels (l)")
    r.add_argument("--sizes", type=int, nargs="+", required=True, help="panel size k, or k_1 .. k_l")
    r.add_argument("--seed", type=int)
    r.add_argument("--relaxed", action="store_true", help="allow non-divisible n, reporting unequal probabilities")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="measure representation factors of a sequence")
    a.add_argument("--instance", required=True)
    a.add_argument("--sequence", required=True)
    a.add_argument("--levels", default="panel,prefix,global")
    a.add_argument("--thresholds", default="auto", help="auto | none | number | level[:t]=value,...")
    a.add_argument("--axiom", choices=("pfc", "prf"), default="pfc")
    a.add_argument("--prf-mode", choices=("auto", "brute", "sound"), default="auto")
    a.add_argument("--fairness-trials", type=int, default=0)
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--seed", type=int, default=0, help="base seed for fairness trials")
    a.add_argument("--out")
    a.set_defaults(func=cmd_audit)

    c = sub.add_parser("compose", help="two-stage PRF composition check")
    c.add_argument("--instance", required=True)
    c.add_argument("--p1", nargs="+", required=True, help="ids of the first-stage panel")
    c.add_argument("--p2", nargs="+", required=True, help="ids of the second-stage panel (subset of p1)")
    c.add_argument("--prf-mode", choices=("auto", "brute", "sound"), default="auto")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compose)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, StructuralError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
