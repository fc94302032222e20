"""Command-line front end.

Every command prints a JSON report on stdout (or writes it to ``--out``).
Exit codes: 0 success (whatever the verdict), 2 invalid input, 3 internal
invariant violation.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import InputError, NetLoccError, PovmInvalid
from .io import decode_matrix, dump_json, load_json
from .network import EdgeSymmetry, NetworkGraph, build_network_state, verify_node_operators, verify_symmetry
from .protocol import LoccProtocol, build_appendix_d_protocol, determinism, simulate
from .reachability import Status, TargetSpec, check_simple_reachable
from .standard_form import bell_diagonalize, stabilizer

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 2, 3


def _emit(report: dict, args) -> None:
    text = dump_json(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _target(path: str) -> tuple[TargetSpec, dict]:
    data = load_json(path)
    return TargetSpec.from_json(data), data


def cmd_classify(args) -> int:
    spec, _ = _target(args.target)
    parties = {}
    for j in spec.graph.nodes:
        form = bell_diagonalize(spec.H(j), tol=args.tol, degeneracy_tol=args.degeneracy_tol)
        entry = form.to_json()
        entry["stabilizer"] = stabilizer(form).to_json()
        parties[str(j)] = entry
    _emit({"command": "classify", "parties": parties}, args)
    return EXIT_OK


def cmd_check(args) -> int:
    spec, data = _target(args.target)
    verdict = check_simple_reachable(spec, tol=args.tol, degeneracy_tol=args.degeneracy_tol)
    report = verdict.to_json()
    report["command"] = "check"
    report["protocol_path"] = None
    if verdict.status is Status.SIMPLE_REACHABLE and args.protocol_out:
        Path(args.protocol_out).write_text(dump_json(verdict.protocol.to_json()) + "\n")
        report["protocol_path"] = str(args.protocol_out)
    if args.appendix_d and "appendix_d" not in data:
        report["notes"].append("target carries no appendix_d parameters; nothing to offer")
    elif args.appendix_d:
        _, proto, info = build_appendix_d_protocol(**_appendix_d_params(data["appendix_d"]))
        ok, res = proto.validate()
        report["appendix_d"] = {"info": info, "validates": ok, "povm_residual": res}
        if args.protocol_out and verdict.status is not Status.SIMPLE_REACHABLE:
            Path(args.protocol_out).write_text(dump_json(proto.to_json()) + "\n")
            report["protocol_path"] = str(args.protocol_out)
    _emit(report, args)
    return EXIT_OK


def cmd_protocol(args) -> int:
    spec, _ = _target(args.target)
    verdict = check_simple_reachable(spec, tol=args.tol, degeneracy_tol=args.degeneracy_tol)
    report = {"command": "protocol", "status": verdict.status.value, "party_k": verdict.party_k, "protocol": None}
    if verdict.protocol is not None:
        report["protocol"] = verdict.protocol.to_json()
    _emit(report, args)
    return EXIT_OK


def _simulation_report(proto: LoccProtocol, args, target: np.ndarray | None) -> dict:
    initial = build_network_state(proto.graph)
    branches = simulate(proto, initial, mode=args.mode, seed=args.seed, samples=args.samples, target=target)
    ok, res = proto.validate()
    report = {
        "command": "simulate",
        "mode": args.mode,
        "povm_residual": res,
        "branch_count": len(branches),
        "total_probability": float(sum(b.probability for b in branches)),
        "max_pairwise_infidelity": determinism(branches),
        "deterministic": determinism(branches) < 1e-8,
        "branches": [b.to_json() for b in branches],
    }
    if target is not None:
        report["min_fidelity"] = min(b.fidelity for b in branches) if branches else None
    else:
        ref = initial.amplitudes
        report["min_fidelity_to_initial"] = min(T.fidelity(b.state.amplitudes, ref) for b in branches)
    return report


def cmd_simulate(args) -> int:
    data = load_json(args.protocol)
    graph = NetworkGraph.from_json(load_json(args.graph)) if args.graph else None
    proto = LoccProtocol.from_json(data, graph)
    target = None
    if args.target:
        spec, _ = _target(args.target)
        if spec.graph != proto.graph:
            raise InputError("target graph differs from the protocol graph")
        target = spec.state().amplitudes
    try:
        report = _simulation_report(proto, args, target)
    except PovmInvalid as exc:
        # a user-supplied protocol that does not validate is an input problem
        print(f"error: {exc}", file=sys.stderr)
        print(dump_json({"command": "simulate", "error": "PovmInvalid", "residual": exc.residual}))
        return EXIT_INPUT
    _emit(report, args)
    return EXIT_OK


def cmd_verify_symmetry(args) -> int:
    graph = NetworkGraph.from_json(load_json(args.graph))
    data = load_json(args.symmetry)
    tol = args.tol if args.tol_set else 1e-10
    if "edges" in data:
        assignment = {int(e): decode_matrix(m, (2, 2)) for e, m in data["edges"].items()}
        ok, res = verify_symmetry(EdgeSymmetry(assignment, graph.source), graph, tol)
        kind = "edges"
    elif "nodes" in data:
        ops = {}
        for j, m in data["nodes"].items():
            d = 2 ** len(graph.party_qubits(int(j)))
            ops[int(j)] = decode_matrix(m, (d, d))
        ok, res = verify_node_operators(ops, graph, tol)
        kind = "nodes"
    else:
        raise InputError("symmetry file needs an 'edges' or 'nodes' entry")
    _emit({"command": "verify-symmetry", "kind": kind, "is_symmetry": ok, "residual": res}, args)
    return EXIT_OK


def _appendix_d_params(p: dict) -> dict:
    a1 = tuple(p.get("party1", (0.2, 0.4)))
    a2 = tuple(p.get("party2", (0.2, 0.4)))
    return {"a_pairs": (a1, a2), "c": float(p.get("c", 0.5)), "alpha1": float(p.get("alpha1", math.pi / 8))}


def cmd_appendix_d(args) -> int:
    params = {"party1": [args.a1, args.a2], "party2": [args.a1, args.a2], "c": args.c, "alpha1": args.alpha1}
    spec, proto, info = build_appendix_d_protocol(**_appendix_d_params(params))
    target = spec.to_json()
    target["appendix_d"] = params
    ok, res = proto.validate()
    branches = simulate(proto, build_network_state(spec.graph), target=spec.state().amplitudes, validate=False)
    report = {
        "command": "appendix-d",
        "info": info,
        "validates": ok,
        "povm_residuals": [float(np.linalg.norm(sum(T.dagger(k) @ k for k in rd.kraus) - np.eye(4))) for rd in proto.rounds],
        "total_probability": float(sum(b.probability for b in branches)),
        "min_fidelity": min(b.fidelity for b in branches),
        "max_pairwise_infidelity": determinism(branches),
        "target": target,
        "protocol": proto.to_json(),
    }
    if args.target_out:
        Path(args.target_out).write_text(dump_json(target) + "\n")
    if args.protocol_out:
        Path(args.protocol_out).write_text(dump_json(proto.to_json()) + "\n")
    _emit(report, args)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance (default 1e-9)")
    common.add_argument("--degeneracy-tol", type=float, default=1e-6, help="relative eigenvalue grouping tolerance")
    common.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=64, help="paths drawn in sampled mode")
    common.add_argument("--out", help="write the JSON report here instead of stdout")

    p = argparse.ArgumentParser(prog="netlocc", description="LOCC reachability on cycle networks of qubit sources")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="standard form and stabilizer class per party")
    s.add_argument("target")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("check", parents=[common], help="reachability verdict for a target")
    s.add_argument("target")
    s.add_argument("--protocol-out", help="write the synthesized protocol here")
    s.add_argument("--appendix-d", action="store_true", help="also build the two-measurement triangle protocol")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("protocol", parents=[common], help="synthesize a protocol where every party measures once")
    s.add_argument("target")
    s.set_defaults(func=cmd_protocol)

    s = sub.add_parser("simulate", parents=[common], help="simulate a protocol file")
    s.add_argument("protocol")
    s.add_argument("--graph", help="graph file (defaults to the graph stored in the protocol)")
    s.add_argument("--target", help="target file for fidelity reporting")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify-symmetry", parents=[common], help="check a candidate network symmetry")
    s.add_argument("graph")
    s.add_argument("symmetry")
    s.set_defaults(func=cmd_verify_symmetry)

    s = sub.add_parser("appendix-d", parents=[common], help="generate the triangle example where party 3 measures twice")
    s.add_argument("--a1", type=float, default=0.2)
    s.add_argument("--a2", type=float, default=0.4)
    s.add_argument("--c", type=float, default=0.5)
    s.add_argument("--alpha1", type=float, default=math.pi / 8)
    s.add_argument("--target-out")
    s.add_argument("--protocol-out")
    s.set_defaults(func=cmd_appendix_d)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.tol_set = args.tol is not None
    if args.tol is None:
        args.tol = T.DEFAULT_TOL
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NetLoccError as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
