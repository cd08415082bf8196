"""Post-hoc checkers over executions: consensus properties and invariants.

All checks run on immutable traces so the engine stays algorithm-agnostic.
Failures carry replayable witnesses (rounds, processes, values) so a report
can be re-derived from the trace it came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .engine import Execution, views_equal_until
from .graphs import CommGraph, GraphSequence, causal_past, root_components, single_root


@dataclass
class Verdict:
    """Outcome of checking one execution against the consensus properties."""

    agreement: bool
    agreement_witness: dict[str, Any] | None
    validity: bool
    validity_witness: dict[str, Any] | None
    termination: bool
    undecided: list[int]
    deadline: int
    invariant_failures: list[dict[str, Any]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.agreement
            and self.validity
            and self.termination
            and not self.invariant_failures
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "agreement": self.agreement,
            "agreement_witness": self.agreement_witness,
            "validity": self.validity,
            "validity_witness": self.validity_witness,
            "termination": self.termination,
            "undecided": self.undecided,
            "deadline": self.deadline,
            "invariant_failures": self.invariant_failures,
            "ok": self.ok,
        }


def _decision_of(exec_: Execution, p: int) -> tuple[int | None, int | None]:
    """(value, round) of p's decision, or (None, None)."""
    for r in range(1, exec_.rounds + 1):
        st = exec_.state(p, r)
        if st.decided:
            return st.decision, r
    return None, None


def check_consensus(exec_: Execution, deadline: int | None = None) -> Verdict:
    """Agreement, validity, and termination-by-deadline for one execution.

    With deadline None, termination means "everyone decided by the last
    recorded round".
    """
    if deadline is None:
        deadline = exec_.rounds
    decisions = [_decision_of(exec_, p) for p in range(exec_.n)]

    agreement, agreement_witness = True, None
    decided = [(p, v, r) for p, (v, r) in enumerate(decisions) if v is not None]
    for i in range(1, len(decided)):
        p0, v0, r0 = decided[0]
        p, v, r = decided[i]
        if v != v0:
            agreement = False
            agreement_witness = {
                "process_a": p0, "value_a": v0, "round_a": r0,
                "process_b": p, "value_b": v, "round_b": r,
            }
            break

    validity, validity_witness = True, None
    inputs = set(exec_.inputs)
    for p, v, r in decided:
        if v not in inputs:
            validity = False
            validity_witness = {"process": p, "value": v, "round": r, "inputs": sorted(inputs)}
            break

    cutoff = min(deadline, exec_.rounds)
    undecided = [p for p, (v, r) in enumerate(decisions) if v is None or r > cutoff]
    return Verdict(
        agreement=agreement,
        agreement_witness=agreement_witness,
        validity=validity,
        validity_witness=validity_witness,
        termination=not undecided,
        undecided=undecided,
        deadline=deadline,
    )


def track_v_locked_windows(exec_: Execution) -> list[tuple[int, int, int]]:
    """Maximal runs (start, end, v) of rounds whose root is locked on v.

    A round qualifies if its graph is rooted and every root member's
    end-of-round state has locked = True with one common proposal v.
    """
    windows: list[tuple[int, int, int]] = []
    run_start, run_value = 0, None
    for r in range(1, exec_.rounds + 1):
        root = single_root(exec_.seq.graph(r))
        value: int | None = None
        if root is not None:
            states = [exec_.state(q, r) for q in root]
            proposals = {st.proposal for st in states}
            if all(st.locked for st in states) and len(proposals) == 1:
                (value,) = proposals
        if value is not None and value == run_value:
            continue
        if run_value is not None:
            windows.append((run_start, r - 1, run_value))
        run_value, run_start = value, r
    if run_value is not None:
        windows.append((run_start, exec_.rounds, run_value))
    return windows


def check_locked_root_convergence(exec_: Execution, D: int, N: int) -> list[dict[str, Any]]:
    """After D+2N straight rounds of a v-locked root, all proposals stay v.

    Checks every sufficiently long v-locked window in the trace and reports
    each (round, process) whose proposal differs from v afterwards.
    """
    failures: list[dict[str, Any]] = []
    span = D + 2 * N
    for start, end, v in track_v_locked_windows(exec_):
        if end - start + 1 < span:
            continue
        c = start + span - 1
        for r in range(c, exec_.rounds + 1):
            for p in range(exec_.n):
                proposal = exec_.state(p, r).proposal
                if proposal != v:
                    failures.append({
                        "invariant": "locked-root-convergence",
                        "window": [start, end],
                        "value": v,
                        "round": r,
                        "process": p,
                        "proposal": proposal,
                    })
    return failures


def check_lock_invariant_from(exec_: Execution, b: int, v: int) -> list[dict[str, Any]]:
    """From round b on, everyone is locked on v with a lock backed by b.

    This is the state the designated stable window is supposed to force:
    locked = True, proposal = v, lockround <= b, and either lockround = b
    or b is still queued.
    """
    failures: list[dict[str, Any]] = []
    for r in range(b, exec_.rounds + 1):
        for p in range(exec_.n):
            st = exec_.state(p, r)
            ok = (
                st.locked
                and st.proposal == v
                and st.lockround <= b
                and (st.lockround == b or b in st.queue)
            )
            if not ok:
                failures.append({
                    "invariant": "post-window-lock",
                    "round": r,
                    "process": p,
                    "state": {
                        "proposal": st.proposal,
                        "locked": st.locked,
                        "lockround": st.lockround,
                        "queue": list(st.queue),
                    },
                    "expected_value": v,
                    "window_end": b,
                })
    return failures


def check_agreement_stability(exec_: Execution) -> list[dict[str, Any]]:
    """Once any process decides v, every proposal from that round on is v."""
    first_round, value = None, None
    for r in range(1, exec_.rounds + 1):
        for p in range(exec_.n):
            st = exec_.state(p, r)
            if st.decided and first_round is None:
                first_round, value = r, st.decision
    if first_round is None:
        return []
    failures = []
    for r in range(first_round, exec_.rounds + 1):
        for p in range(exec_.n):
            proposal = exec_.state(p, r).proposal
            if proposal != value:
                failures.append({
                    "invariant": "post-decision-proposals",
                    "round": r,
                    "process": p,
                    "proposal": proposal,
                    "decided_value": value,
                    "first_decision_round": first_round,
                })
    return failures


def check_detection_soundness(exec_: Execution, D: int) -> list[dict[str, Any]]:
    """Every recorded estimate names the true root and rests on known states.

    The trace records, per round r and process p, the estimate of the round
    r-D graph's root. Whenever it is a set, it must equal the unique root
    component of that graph and every member's round-(r-D) state must have
    reached p.
    """
    failures = []
    for r in range(1, exec_.rounds + 1):
        s = r - D
        for p in range(exec_.n):
            est = exec_.detected[r - 1][p]
            if est is None:
                continue
            true_root = single_root(exec_.seq.graph(s)) if s >= 1 else None
            lastround = exec_.lastrounds[r - 1][p]
            known = all(q == p or lastround[q] >= s for q in est)
            if est != true_root or not known:
                failures.append({
                    "invariant": "estimate-soundness",
                    "round": r,
                    "process": p,
                    "estimate": sorted(est),
                    "true_root": sorted(true_root) if true_root else None,
                    "members_known": known,
                })
    return failures


def check_detection_completeness(
    exec_: Execution, window: tuple[int, int, frozenset[int]], D: int
) -> list[dict[str, Any]]:
    """After each D+1-round span of the stable window, everyone detects R.

    For every s with [s, s+D] inside the window, the estimate recorded at
    round s+D (which targets round s) must be exactly the window's root.
    """
    a, b, root = window
    failures = []
    for s in range(a, b - D + 1):
        r = s + D
        if r > exec_.rounds:
            break
        for p in range(exec_.n):
            est = exec_.detected[r - 1][p]
            if est != root:
                failures.append({
                    "invariant": "estimate-completeness",
                    "round": r,
                    "target_round": s,
                    "process": p,
                    "estimate": sorted(est) if est else None,
                    "expected": sorted(root),
                })
    return failures


def check_indistinguishability(
    exec1: Execution, exec2: Execution, p: int, through: int
) -> bool:
    """Does p experience both executions identically through the given round?"""
    return views_equal_until(exec1, exec2, p, through)


def check_information_propagation(graphs: list[CommGraph], X: set[int]) -> bool:
    """Any set hitting every root influences everyone within n rooted rounds.

    Given exactly n rooted graphs (n = process count) and a set X containing
    a member of every graph's root component, verifies that every process p
    has, for some q in X and round r, q in the round-r root with q's round-r
    information reaching p by the end of the last round.
    """
    if not graphs:
        raise ValueError("need at least one graph")
    n = graphs[0].n
    if len(graphs) != n:
        raise ValueError(f"need exactly {n} graphs for {n} processes, got {len(graphs)}")
    seq = GraphSequence(n, tuple(graphs))
    roots = []
    for r, g in enumerate(graphs, start=1):
        root = single_root(g)
        if root is None:
            raise ValueError(f"graph at position {r} is not rooted")
        roots.append(root)
        if not X & root:
            raise ValueError(f"X misses the root of the graph at position {r}")
    for p in range(n):
        ok = any(
            q in roots[r - 1] and q in causal_past(seq, p, r, n)
            for r in range(1, n + 1)
            for q in X
        )
        if not ok:
            return False
    return True


def brute_force_roots(g: CommGraph) -> frozenset[frozenset[int]]:
    """Exponential root-component oracle: all closed strongly connected sets.

    Only usable for small n; kept here as the independent cross-check for
    the production computation.
    """
    n = g.n
    succ: dict[int, set[int]] = {u: set() for u in range(n)}
    for u, v in g.edges:
        succ[u].add(v)
    found = []
    for mask in range(1, 1 << n):
        members = frozenset(i for i in range(n) if mask >> i & 1)
        # closed: no edge from outside into the set
        if any(v in members and u not in members for u, v in g.edges):
            continue
        # strongly connected (with implicit self-loops, singletons qualify)
        ok = True
        for src in members:
            seen = {src}
            frontier = [src]
            while frontier:
                u = frontier.pop()
                for v in succ[u]:
                    if v in members and v not in seen:
                        seen.add(v)
                        frontier.append(v)
            if seen != members:
                ok = False
                break
        if ok:
            found.append(members)
    return frozenset(found)


def verify_root_computation(g: CommGraph) -> bool:
    """Cross-check the fast root computation against the brute-force oracle."""
    return root_components(g) == brute_force_roots(g)
