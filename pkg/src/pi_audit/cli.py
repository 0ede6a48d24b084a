"""Command-line front end.

Every subcommand is a thin adapter over the library: read an instance (file
or ``-`` for stdin), run one operation, print a deterministic report. JSON
output is byte-stable (sorted keys, canonical id order); wall-clock timings
are only included under ``--timings`` so default output stays reproducible.

Exit codes: 0 on success, 1 for "no" verdicts under ``--strict``, 2 for
usage/input/budget errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import IO

from . import cei as cei_mod
from . import graphs, model, rationalize, restore

ENV_PREFIX = "PI_AUDIT_"


def _budget(flag_value: int | None, env_name: str, default: int) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_PREFIX + env_name)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise model.ParseError(f"environment variable {ENV_PREFIX}{env_name} must be an integer")
    return default


def _read_source(path: str, stdin: IO) -> str:
    if path == "-":
        return stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _sniff_format(path: str, override: str | None) -> str:
    if override:
        return override
    if path != "-" and path.lower().endswith(".csv"):
        return "csv"
    return "json"


def _load_instance(args, stdin: IO) -> model.Instance:
    text = _read_source(args.instance, stdin)
    fmt = _sniff_format(args.instance, getattr(args, "input_format", None))
    return model.load_instance(text, fmt)


def _emit_json(payload: dict, stdout: IO) -> None:
    stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _emit_kv_table(payload: dict, stdout: IO) -> None:
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        stdout.write(f"{key}: {value}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pi-audit",
        description=(
            "Test whether an observed aggregate object allocation can be "
            "rationalized as Pareto-efficient and individually rational, and "
            "quantify the failure when it cannot."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, with_instance: bool = True) -> None:
        if with_instance:
            p.add_argument("instance", help="instance file (JSON or CSV), or - for stdin")
            p.add_argument(
                "--input-format",
                choices=["json", "csv"],
                help="override input format sniffing (stdin defaults to json)",
            )
        p.add_argument(
            "--format",
            choices=["json", "table", "dot", "csv"],
            default="json",
            help="output format (default: json)",
        )
        p.add_argument(
            "--strict",
            action="store_true",
            help='exit with status 1 on "no" verdicts, for pipeline use',
        )
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker hint; results are identical for every value",
        )
        p.add_argument(
            "--timings",
            action="store_true",
            help="include wall-clock timings (breaks byte-for-byte reproducibility)",
        )

    p_test = sub.add_parser("test", help="decide PI-rationalizability")
    add_common(p_test)
    p_test.add_argument(
        "--with-restore",
        metavar="MODES",
        help="comma-separated removal modes to solve and attach (e.g. individuals,objects)",
    )
    p_test.add_argument(
        "--with-cei",
        choices=["exact", "heuristic"],
        help="attach a Critical Exchange Index section",
    )
    p_test.add_argument(
        "--with-oracle",
        action="store_true",
        help="cross-check the verdict against the brute-force oracle",
    )
    p_test.add_argument("--max-exact-ids", type=int, default=None)
    p_test.add_argument("--exchange-budget", type=int, default=None)
    p_test.add_argument("--oracle-budget", type=int, default=None)

    p_witness = sub.add_parser("witness", help="construct a witness preference profile")
    add_common(p_witness)

    p_check = sub.add_parser("check", help="check PI for an explicit profile")
    add_common(p_check)
    p_check.add_argument("--profile", required=True, help="profile JSON file, or - for stdin")

    p_restore = sub.add_parser("restore", help="maximal kept subset restoring rationalizability")
    add_common(p_restore)
    p_restore.add_argument(
        "--mode",
        required=True,
        choices=[m.value for m in model.ReductionMode],
    )
    group = p_restore.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true", help="exact solver (default)")
    group.add_argument("--greedy", action="store_true", help="greedy solver")
    p_restore.add_argument("--k", type=int, default=None, help="also answer the >= K decision")
    p_restore.add_argument("--max-exact-ids", type=int, default=None)

    p_cei = sub.add_parser("cei", help="Critical Exchange Index")
    add_common(p_cei)
    group = p_cei.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true", help="exact maximizer (default)")
    group.add_argument("--heuristic", action="store_true", help="cycle-execution heuristic")
    p_cei.add_argument("--exchange-budget", type=int, default=None)

    p_gadget = sub.add_parser("gadget", help="emit an independent-set reduction instance")
    p_gadget.add_argument("kind", choices=["mir", "mhr", "mtr"])
    add_common(p_gadget, with_instance=False)
    p_gadget.add_argument("--graph", required=True, help="simple graph JSON file, or - for stdin")
    p_gadget.add_argument("--k", type=int, required=True, help="independent-set target size")
    p_gadget.add_argument("--out", help="write the instance JSON here instead of embedding it")

    p_mis = sub.add_parser("mis", help="exact maximum independent set of a simple graph")
    add_common(p_mis, with_instance=False)
    p_mis.add_argument("--graph", required=True, help="simple graph JSON file, or - for stdin")

    p_export = sub.add_parser("export", help="export graphs or the instance itself")
    add_common(p_export)
    p_export.add_argument("--type", help="export this type's move graph instead of the allocation graph")

    p_validate = sub.add_parser("validate", help="report violated instance invariants")
    add_common(p_validate)
    p_validate.add_argument(
        "--lenient-endowment",
        action="store_true",
        help="do not require endowments to fill objects exactly to capacity",
    )

    return parser


# --- handlers -----------------------------------------------------------------


def _cmd_test(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    t0 = time.perf_counter()
    inst = _load_instance(args, stdin)
    verdict = rationalize.test_pi_rationalizable(inst)
    if args.format == "dot":
        stdout.write(graphs.export_dot(graphs.build_allocation_graph(inst)))
        return 0 if (verdict.rationalizable or not args.strict) else 1
    payload: dict = {
        "instance": {
            "individuals": len(inst.individuals),
            "objects": len(inst.objects),
            "types": len(inst.types),
        },
        "verdict": verdict.to_json_dict(),
    }
    if args.with_restore:
        budget = _budget(args.max_exact_ids, "MAX_EXACT_IDS", 24)
        section = {}
        for name in args.with_restore.split(","):
            mode = model.ReductionMode(name.strip())
            try:
                cert = restore.solve_removal_exact(inst, mode, max_candidates=budget)
            except model.BudgetExceededError:
                cert = restore.greedy_removal(inst, mode)
            section[mode.value] = cert.to_json_dict()
        payload["restore"] = section
    if args.with_cei:
        budget = _budget(args.exchange_budget, "EXCHANGE_BUDGET", 10)
        result = cei_mod.compute_cei(inst, strategy=args.with_cei, exact_budget=budget)
        payload["cei"] = result.to_json_dict()
    if args.with_oracle:
        budget = _budget(args.oracle_budget, "ORACLE_BUDGET", 1_000_000)
        try:
            oracle = rationalize.brute_force_pi_oracle(inst, budget=budget)
        except model.BudgetExceededError as exc:
            raise model.BudgetExceededError(f"{exc}; raise --oracle-budget") from exc
        payload["oracle"] = {"rationalizable": oracle, "agrees": oracle == verdict.rationalizable}
    if args.timings:
        payload["timings"] = {"wall_time_ms": round((time.perf_counter() - t0) * 1000.0, 3)}
    if args.format == "table":
        flat = {
            "individuals": payload["instance"]["individuals"],
            "objects": payload["instance"]["objects"],
            "types": payload["instance"]["types"],
            "rationalizable": verdict.rationalizable,
        }
        if verdict.counterexample:
            flat["cycle"] = " -> ".join(verdict.counterexample.vertices)
        _emit_kv_table(flat, stdout)
    else:
        _emit_json(payload, stdout)
    return 0 if (verdict.rationalizable or not args.strict) else 1


def _cmd_witness(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    inst = _load_instance(args, stdin)
    verdict = rationalize.test_pi_rationalizable(inst)
    if not verdict.rationalizable:
        assert verdict.counterexample is not None
        cycle = " -> ".join(verdict.counterexample.vertices)
        stderr.write(f"not PI-rationalizable: allocation graph cycle {cycle}\n")
        return 1
    assert verdict.witness is not None
    if args.format == "table":
        stdout.write(verdict.witness.render_table() + "\n")
    else:
        stdout.write(model.dump_profile(verdict.witness))
    return 0


def _cmd_check(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    inst = _load_instance(args, stdin)
    prof = model.load_profile(_read_source(args.profile, stdin))
    ir_ok, violators = rationalize.check_ir(inst, prof)
    pe_ok, envy_cycle = rationalize.check_pe(inst, prof)
    payload = {
        "ir": ir_ok,
        "ir_violators": list(violators),
        "pe": pe_ok,
        "envy_cycle": list(envy_cycle.vertices) if envy_cycle else None,
        "pi": ir_ok and pe_ok,
    }
    if args.format == "table":
        _emit_kv_table(payload, stdout)
    else:
        _emit_json(payload, stdout)
    return 0 if (payload["pi"] or not args.strict) else 1


def _cmd_restore(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    t0 = time.perf_counter()
    inst = _load_instance(args, stdin)
    mode = model.ReductionMode(args.mode)
    if args.greedy:
        cert = restore.greedy_removal(inst, mode)
    else:
        budget = _budget(args.max_exact_ids, "MAX_EXACT_IDS", 24)
        cert = restore.solve_removal_exact(inst, mode, max_candidates=budget)
    payload = cert.to_json_dict()
    if args.k is not None:
        payload["decision"] = {"K": args.k, "achievable": cert.objective >= args.k}
    if args.timings:
        payload["wall_time_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)
    if args.format == "table":
        _emit_kv_table(payload, stdout)
    else:
        _emit_json(payload, stdout)
    if args.k is not None:
        success = cert.objective >= args.k
    else:
        universe = (
            inst.individuals
            if mode is model.ReductionMode.INDIVIDUALS
            else inst.types if mode is model.ReductionMode.TYPES else inst.objects
        )
        success = cert.objective == len(universe)
    return 0 if (success or not args.strict) else 1


def _cmd_cei(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    inst = _load_instance(args, stdin)
    strategy = "heuristic" if args.heuristic else "exact"
    budget = _budget(args.exchange_budget, "EXCHANGE_BUDGET", 10)
    result = cei_mod.compute_cei(inst, strategy=strategy, exact_budget=budget)
    payload = result.to_json_dict()
    payload["strategy"] = strategy
    if args.format == "table":
        flat = dict(payload)
        flat["cei"] = f"{result.cei.numerator}/{result.cei.denominator}"
        flat.pop("y")
        _emit_kv_table(flat, stdout)
    else:
        _emit_json(payload, stdout)
    return 0 if (result.cei == 0 or not args.strict) else 1


def _cmd_gadget(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    g = restore.load_simple_graph(_read_source(args.graph, stdin))
    if args.kind == "mir":
        inst, K = restore.generate_mir_gadget(g, args.k)
    else:
        inst, K = restore.generate_mhr_mtr_gadget(g, args.k)
    payload: dict = {
        "kind": args.kind,
        "K": K,
        "individuals": len(inst.individuals),
        "types": len(inst.types),
        "objects": len(inst.objects),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(model.dump_instance_json(inst))
        payload["path"] = args.out
    else:
        payload["instance"] = json.loads(model.dump_instance_json(inst))
    _emit_json(payload, stdout)
    return 0


def _cmd_mis(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    g = restore.load_simple_graph(_read_source(args.graph, stdin))
    size, witness = restore.brute_force_mis(g)
    _emit_json({"size": size, "witness": list(witness)}, stdout)
    return 0


def _cmd_export(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    inst = _load_instance(args, stdin)
    if args.format == "csv":
        stdout.write(model.dump_instance_csv(inst))
        return 0
    if args.type is not None:
        g = graphs.build_type_move_graph(inst, args.type).graph
    else:
        g = graphs.build_allocation_graph(inst)
    if args.format == "dot":
        stdout.write(graphs.export_dot(g))
    elif args.format == "table":
        for u, v in g.edges:
            stdout.write(f"{u} -> {v}\n")
    else:
        stdout.write(graphs.export_adjacency_json(g))
    return 0


def _cmd_validate(args, stdout: IO, stderr: IO, stdin: IO) -> int:
    inst = _load_instance(args, stdin)
    violations = model.validate_instance(inst, lenient_endowment=args.lenient_endowment)
    payload = {
        "valid": not violations,
        "violations": [
            {"code": v.code, "subject": v.subject, "message": v.message} for v in violations
        ],
    }
    if args.format == "table":
        if violations:
            for v in violations:
                stdout.write(f"{v.code} [{v.subject}]: {v.message}\n")
        else:
            stdout.write("valid\n")
    else:
        _emit_json(payload, stdout)
    return 0 if (not violations or not args.strict) else 1


_HANDLERS = {
    "test": _cmd_test,
    "witness": _cmd_witness,
    "check": _cmd_check,
    "restore": _cmd_restore,
    "cei": _cmd_cei,
    "gadget": _cmd_gadget,
    "mis": _cmd_mis,
    "export": _cmd_export,
    "validate": _cmd_validate,
}


def run_cli(
    argv: list[str] | None = None,
    stdout: IO | None = None,
    stderr: IO | None = None,
    stdin: IO | None = None,
) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    stdin = stdin if stdin is not None else sys.stdin
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handler = _HANDLERS[args.command]
    try:
        return handler(args, stdout, stderr, stdin)
    except model.BudgetExceededError as exc:
        stderr.write(f"error: {exc}\n")
        return 2
    except (ValueError, OSError) as exc:  # ParseError/SchemaError included
        stderr.write(f"error: {exc}\n")
        return 2


def main() -> None:  # pragma: no cover - console entry point
    sys.exit(run_cli())
