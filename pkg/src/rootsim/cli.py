"""Command-line front end: run, sweep, validate, scenario.

Exit codes: 0 all checks passed, 1 a property check failed, 2 usage or
parse error. All randomness derives from the single --seed; sweeps use
seed + trial index per trial.
"""

from __future__ import annotations

import argparse
import json
import random
import statistics
import sys
from typing import Any

from . import adversary, engine, verification
from .algorithms import LockingConsensus, VotingConsensus
from .graphs import GraphError, GraphSequence, read_jsonl, write_jsonl

# Decisions of the voting algorithm land this many compound rounds after
# the second graph of the first broadcast window (observed constant; the
# second graph delivers the root's states, the round after spreads the
# unanimous vote).
VOTING_DECISION_OFFSET = 1


class UsageError(Exception):
    pass


def _load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    return cfg


def _merge(cfg: dict[str, Any], args: argparse.Namespace, keys: list[str]) -> dict[str, Any]:
    merged = dict(cfg)
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _resolve_inputs(cfg: dict[str, Any], n: int, seed: int) -> list[int]:
    inputs = cfg.get("inputs", "random-binary")
    if inputs == "random-binary":
        rng = random.Random(f"inputs-{seed}")
        return [rng.randint(0, 1) for _ in range(n)]
    if isinstance(inputs, list) and len(inputs) == n:
        return [int(v) for v in inputs]
    raise UsageError(f"inputs must be 'random-binary' or a list of {n} integers")


def _plan_locking(cfg: dict[str, Any], seed: int) -> dict[str, Any]:
    """Fill in derived run parameters for the locking algorithm."""
    try:
        n = int(cfg["n"])
    except KeyError:
        raise UsageError("n is required") from None
    N = int(cfg.get("N", n))
    D = int(cfg.get("D", max(1, n - 1)))
    x = int(cfg.get("x", D + 1))
    if N < n:
        raise UsageError(f"the size bound N must be >= n, got N={N}, n={n}")
    if not (1 <= D <= max(1, n - 1)):
        raise UsageError(f"need 1 <= D <= n-1, got D={D}")
    decide_span = N * (D + 2 * N)
    plan = {"n": n, "N": N, "D": D, "x": x, "decide_span": decide_span, "seed": seed}
    if cfg.get("sequence"):
        try:
            with open(cfg["sequence"]) as fh:
                seq = read_jsonl(fh)
        except (OSError, GraphError) as exc:
            raise UsageError(f"cannot load sequence: {exc}") from exc
        if seq.n != n:
            raise UsageError(f"sequence has n={seq.n}, config says {n}")
        runs = adversary.stable_runs(seq)
        window = next(((s, e, root) for (s, e, root) in runs if e - s + 1 >= x), None)
        plan.update(seq=seq, window=window)
        plan["horizon"] = int(cfg.get("horizon") or len(seq))
    else:
        rng = random.Random(f"window-{seed}")
        start = int(cfg.get("stability_start") or rng.randint(3, x + n + 2))
        b = start + x - 1
        horizon = int(cfg.get("horizon") or b + decide_span + 5)
        spec = adversary.AdversarySpec(
            n=n, D=D, x=x, horizon=horizon, seed=seed, stability_start=start
        )
        seq, window = adversary.generate_stable(spec)
        plan.update(seq=seq, window=window, horizon=horizon)
    return plan


def _run_locking(cfg: dict[str, Any], seed: int) -> tuple[engine.Execution, verification.Verdict]:
    plan = _plan_locking(cfg, seed)
    seq, window = plan["seq"], plan["window"]
    n, N, D = plan["n"], plan["N"], plan["D"]
    algo = LockingConsensus(
        N=N,
        D=D,
        history_window=cfg.get("history_window", "deadline"),
        prune=cfg.get("prune", "max"),
        adopt_unanimous=cfg.get("adopt_unanimous", True),
        backoff=cfg.get("backoff", True),
        decide_rule=cfg.get("decide_rule", "sliding"),
    )
    inputs = _resolve_inputs(cfg, n, seed)
    exec_ = engine.run(algo, inputs, seq, horizon=min(plan["horizon"], len(seq)))
    deadline = window[1] + plan["decide_span"] if window else exec_.rounds
    verdict = verification.check_consensus(exec_, deadline)
    verdict.invariant_failures.extend(verification.check_detection_soundness(exec_, D))
    if window:
        verdict.invariant_failures.extend(
            verification.check_detection_completeness(exec_, window, D)
        )
    verdict.invariant_failures.extend(verification.check_locked_root_convergence(exec_, D, N))
    verdict.invariant_failures.extend(verification.check_agreement_stability(exec_))
    return exec_, verdict


def _run_voting(cfg: dict[str, Any], seed: int) -> tuple[engine.Execution, verification.Verdict]:
    try:
        n = int(cfg["n"])
    except KeyError:
        raise UsageError("n is required") from None
    if n < 2:
        raise UsageError("the voting algorithm needs n >= 2")
    stable_len = 3 * (n - 1)
    horizon = int(cfg.get("horizon") or (stable_len + 6 * (n - 1)))
    horizon -= horizon % (n - 1)
    if cfg.get("sequence"):
        try:
            with open(cfg["sequence"]) as fh:
                base = read_jsonl(fh)
        except (OSError, GraphError) as exc:
            raise UsageError(f"cannot load sequence: {exc}") from exc
    else:
        base, _ = adversary.generate_rooted(n, horizon, seed, stable_len=stable_len)
    compound = adversary.compound_sequence(base)
    inputs = _resolve_inputs(cfg, n, seed)
    exec_ = engine.run(VotingConsensus(), inputs, compound)
    stars = adversary.check_star_window(compound, 2)
    deadline = stars[0][0] + 1 + VOTING_DECISION_OFFSET if stars else exec_.rounds
    verdict = verification.check_consensus(exec_, deadline)
    nonsplit_ok, split = adversary.check_nonsplit(compound)
    if not nonsplit_ok:
        verdict.invariant_failures.append(
            {"invariant": "compound-nonsplit", "violation": list(split or ())}
        )
    return exec_, verdict


def run_once(cfg: dict[str, Any], seed: int) -> tuple[engine.Execution, verification.Verdict]:
    algorithm = cfg.get("algorithm", "locking")
    if algorithm == "locking":
        return _run_locking(cfg, seed)
    if algorithm == "voting":
        return _run_voting(cfg, seed)
    raise UsageError(f"unknown algorithm {algorithm!r} (expected 'locking' or 'voting')")


def _write_outputs(args: argparse.Namespace, exec_: engine.Execution, verdict: verification.Verdict) -> None:
    if getattr(args, "out_trace", None):
        with open(args.out_trace, "w") as fh:
            exec_.write_trace(fh)
    if getattr(args, "out_verdict", None):
        with open(args.out_verdict, "w") as fh:
            json.dump(verdict.to_json(), fh, indent=2)
            fh.write("\n")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _merge(
        _load_config(args.config),
        args,
        ["algorithm", "n", "N", "D", "x", "seed", "horizon", "sequence",
         "history_window", "prune", "decide_rule", "stability_start"],
    )
    seed = int(cfg.get("seed", 0))
    exec_, verdict = run_once(cfg, seed)
    _write_outputs(args, exec_, verdict)
    print(json.dumps(verdict.to_json(), indent=2))
    return 0 if verdict.ok else 1


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _merge(
        _load_config(args.config),
        args,
        ["algorithm", "n", "N", "D", "x", "seed", "horizon", "sequence",
         "history_window", "prune", "decide_rule", "stability_start"],
    )
    trials = args.trials if args.trials is not None else int(cfg.get("trials", 0))
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    base_seed = int(cfg.get("seed", 0))
    passed, failures, crashes = 0, [], []
    decision_offsets: list[int] = []
    for i in range(trials):
        seed = base_seed + i
        try:
            exec_, verdict = run_once(cfg, seed)
        except (adversary.GenerationError, engine.EngineError) as exc:
            crashes.append({"seed": seed, "error": str(exc)})
            continue
        if verdict.ok:
            passed += 1
            last_decisions = [
                next(r for r in range(1, exec_.rounds + 1) if exec_.state(p, r).decided)
                for p in range(exec_.n)
            ]
            decision_offsets.append(verdict.deadline - max(last_decisions))
        else:
            failures.append({"seed": seed, "verdict": verdict.to_json()})
    summary = {
        "trials": trials,
        "passed": passed,
        "failed": len(failures),
        "crashed": len(crashes),
        "decision_margin": {
            "min": min(decision_offsets) if decision_offsets else None,
            "median": statistics.median(decision_offsets) if decision_offsets else None,
            "max": max(decision_offsets) if decision_offsets else None,
        },
        "failures": failures[:10],
        "crashes": crashes[:10],
    }
    print(json.dumps(summary, indent=2))
    return 0 if passed == trials else 1


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        with open(args.sequence) as fh:
            seq = read_jsonl(fh)
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    except GraphError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    report = adversary.membership_report(seq, args.D, args.x)
    print(json.dumps(report.to_json(), indent=2))
    return 0 if report.member else 1


def cmd_scenario(args: argparse.Namespace) -> int:
    params: dict[str, Any] = {}
    for key in ("n", "D", "tau", "horizon", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    if args.dotted_first is not None:
        params["dotted_first"] = args.dotted_first
    try:
        seq = adversary.scenario(args.name, **params)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"scenario {args.name!r}: {exc}") from exc
    if args.out:
        with open(args.out, "w") as fh:
            write_jsonl(seq, fh)
    else:
        write_jsonl(seq, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rootsim",
        description="Simulate and verify consensus over rooted dynamic network sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--algorithm", choices=["locking", "voting"])
        p.add_argument("--n", type=int)
        p.add_argument("--N", type=int, dest="N", help="known upper bound on n")
        p.add_argument("--D", type=int, dest="D", help="information-propagation diameter")
        p.add_argument("--x", type=int, help="stable-window length")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--sequence", help="JSON-lines sequence file to run on")
        p.add_argument("--stability-start", type=int, dest="stability_start")
        p.add_argument(
            "--history-window",
            choices=["deadline", "squared"],
            dest="history_window",
            help="lookback of the decide guard's old-state scan",
        )
        p.add_argument("--prune", choices=["max", "min"], help="backoff queue pruning witness")
        p.add_argument(
            "--decide-rule",
            choices=["sliding", "exact"],
            dest="decide_rule",
            help="evaluate the decide guard from the deadline onward, or only at it",
        )
        p.add_argument("--out-trace", dest="out_trace")
        p.add_argument("--out-verdict", dest="out_verdict")

    p_run = sub.add_parser("run", help="run one execution and check it")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run seeded trials and aggregate")
    common(p_sweep)
    p_sweep.add_argument("--trials", type=int)
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="check a sequence file's admissibility")
    p_val.add_argument("sequence")
    p_val.add_argument("--D", type=int, required=True, dest="D")
    p_val.add_argument("--x", type=int, required=True)
    p_val.set_defaults(func=cmd_validate)

    p_scn = sub.add_parser("scenario", help="emit a scripted sequence")
    p_scn.add_argument("name", choices=list(adversary.SCENARIO_NAMES))
    p_scn.add_argument("--n", type=int)
    p_scn.add_argument("--D", type=int, dest="D")
    p_scn.add_argument("--tau", type=int)
    p_scn.add_argument("--horizon", type=int)
    p_scn.add_argument("--seed", type=int)
    p_scn.add_argument("--dotted-first", type=int, choices=[0, 1], dest="dotted_first")
    p_scn.add_argument("--out")
    p_scn.set_defaults(func=cmd_scenario)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
