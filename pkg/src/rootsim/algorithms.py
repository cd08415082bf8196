"""The two consensus behaviors driven by the engine.

LockingConsensus tolerates sequences that are always rooted, have
information-propagation diameter D, and eventually keep one root component
stable for D+1 rounds. Each process chases the most recent root component
it can detect, locks onto its maximum proposal, queues confirmations,
backs off when it learns of disagreeing processes, adopts a unanimous
locked value it has been seeing for long enough, and decides once every
recent-enough state it knows of agrees with its own locked proposal.

VotingConsensus solves consensus on compound sequences (blocks of n-1
rounds collapsed into one graph) that are non-split and eventually contain
two consecutive broadcast rounds from a stable root.
"""

from __future__ import annotations

from typing import Any, NamedTuple

from .detection import estimate_root
from .engine import ProcessView


class LockState(NamedTuple):
    proposal: int
    locked: bool
    lockround: int
    queue: tuple[int, ...]
    decided: bool
    decision: int | None


class VoteState(NamedTuple):
    proposal: int
    vote: int | None
    decided: bool
    decision: int | None


class LockingConsensus:
    """Locking consensus; parameters N (known bound on n, N >= n) and D.

    Optional knobs (defaults are the verified configuration):
    - history_window: "deadline" bounds the old-state scan of the decide
      guard by the decide deadline itself; "squared" uses the wider
      (D+2N)^2 lookback.
    - prune: on backoff, drop queued confirmations up to the "max" (default)
      or "min" violating state round.
    - adopt_unanimous: enable the unanimous-locked-value adoption rule
      (disabling it is a mutation used to validate the checkers).
    - backoff: enable the backoff rule (same purpose).
    - decide_rule: "sliding" (default) evaluates the decide guard every
      round from the lock deadline onward; "exact" evaluates it only in
      the single round equal to the deadline. The sliding rule is what
      makes termination-by-deadline hold: a process whose lock round
      predates the stability window gets exactly one "exact" chance, and
      that chance can land while stale pre-stability states are still in
      scope, after which the guard would never be re-examined.
    """

    name = "locking"

    def __init__(
        self,
        N: int,
        D: int,
        history_window: str = "deadline",
        prune: str = "max",
        adopt_unanimous: bool = True,
        backoff: bool = True,
        decide_rule: str = "sliding",
    ):
        if N < 1 or D < 1:
            raise ValueError(f"need N >= 1 and D >= 1, got N={N}, D={D}")
        if history_window not in ("deadline", "squared"):
            raise ValueError(f"unknown history_window {history_window!r}")
        if prune not in ("max", "min"):
            raise ValueError(f"unknown prune mode {prune!r}")
        if decide_rule not in ("sliding", "exact"):
            raise ValueError(f"unknown decide_rule {decide_rule!r}")
        self.N = N
        self.D = D
        self.history_window = history_window
        self.prune = prune
        self.adopt_unanimous = adopt_unanimous
        self.backoff = backoff
        self.decide_rule = decide_rule
        self.params = {
            "N": N,
            "D": D,
            "history_window": history_window,
            "prune": prune,
            "adopt_unanimous": adopt_unanimous,
            "backoff": backoff,
            "decide_rule": decide_rule,
        }
        # Estimator memoization, keyed (pid, s). An estimate is final once
        # it is a set (views only grow, so it never reverts) or once every
        # process's round-s state is known (no report can appear later).
        self._root_cache: dict[tuple[int, int], frozenset[int] | None] = {}

    def initial_state(self, pid: int, x: int) -> LockState:
        return LockState(proposal=x, locked=True, lockround=1, queue=(), decided=False, decision=None)

    def trace_fields(self, state: LockState) -> dict[str, Any]:
        return {
            "proposal": state.proposal,
            "locked": state.locked,
            "lockround": state.lockround,
            "queue": list(state.queue),
            "decided": state.decided,
            "decision": state.decision,
        }

    def deadline(self, lockround: int) -> int:
        return lockround + self.N * (self.D + 2 * self.N)

    def _estimate(self, view: ProcessView, s: int) -> frozenset[int] | None:
        if s < 1 or s > view.round:
            return None
        key = (view.owner, s)
        cached = self._root_cache.get(key, False)
        if cached is not False:
            return cached  # type: ignore[return-value]
        result = estimate_root(view, s)
        if result is not None or min(view.last_heard(q) for q in range(view.n)) >= s:
            self._root_cache[key] = result
        return result

    def step(self, state: LockState, view: ProcessView, r: int) -> tuple[LockState, frozenset[int] | None]:
        N, D = self.N, self.D
        proposal, locked, lockround, queue, decided, decision = state
        n = view.n

        root = self._estimate(view, r - D)

        # Recent states: everyone whose fresh-enough state reached us, with
        # all their recorded states inside the N-round lookback.
        lo = max(0, r - N)
        recent: list[LockState] = []
        for q in range(n):
            if view.last_heard(q) >= lo:
                row = view.states_of(q)
                recent.extend(row[lo : view.last_state_round(q) + 1])
        locked_values = {st.proposal for st in recent if st.locked}

        if root is not None:
            candidate = max(view.state(q, r - D).proposal for q in root)
            adopt = not locked
            if not adopt and candidate != proposal:
                # Count the distinct detectable root components between the
                # oldest round still backing our lock and the newest
                # detectable one; more than one means our lock's evidence
                # spans a root change and may be stale.
                t_lo = max(1, max(queue[-1] if queue else 0, lockround) - D)
                seen: set[frozenset[int]] = set()
                for i in range(t_lo, r - D + 1):
                    est = self._estimate(view, i)
                    if est is not None:
                        seen.add(est)
                        if len(seen) > 1:
                            break
                adopt = len(seen) > 1
            if adopt:
                proposal, locked, lockround = candidate, True, r
            elif candidate == proposal:
                queue = queue + (r,)

        if self.backoff and r >= lockround + N:
            violating = [
                s
                for q in range(n)
                if view.last_heard(q) >= lo
                for s, st in enumerate(view.states_of(q)[lo : view.last_state_round(q) + 1], start=lo)
                if not st.locked or st.proposal != proposal
            ]
            if violating:
                cut = max(violating) if self.prune == "max" else min(violating)
                queue = tuple(t for t in queue if t > cut)
                if queue:
                    lockround = queue[0]
                else:
                    locked = False

        if self.adopt_unanimous and r >= lockround + 2 * N and len(locked_values) == 1:
            (unanimous,) = locked_values
            if unanimous != proposal:
                proposal = unanimous

        at_deadline = (
            r >= self.deadline(lockround)
            if self.decide_rule == "sliding"
            else r == self.deadline(lockround)
        )
        if not decided and at_deadline:
            span = self.N * (D + 2 * N) if self.history_window == "deadline" else (D + 2 * N) ** 2
            lo2 = max(0, r - self.N * (D + 2 * N))
            s_lo = max(0, r - span)
            all_match = True
            for q in range(n):
                if view.last_heard(q) < lo2:
                    continue
                for st in view.states_of(q)[s_lo : view.last_state_round(q) + 1]:
                    if not st.locked or st.proposal != proposal:
                        all_match = False
                        break
                if not all_match:
                    break
            if all_match:
                decided, decision = True, proposal

        return (
            LockState(proposal, locked, lockround, queue, decided, decision),
            root,
        )


def value_of_root(
    root: frozenset[int], messages: dict[int, tuple[int | None, int]]
) -> int | None:
    """The value a detected root dictates: a member's pending vote if any
    member has one, else the maximum proposal among received members.

    Returns None when no root member's message was received (out of
    contract; callers fall through to the non-root rules).
    """
    received = [q for q in sorted(root) if q in messages]
    if not received:
        return None
    for q in received:
        vote = messages[q][0]
        if vote is not None:
            return vote
    return max(messages[q][1] for q in received)


class VotingConsensus:
    """Voting consensus for non-split compound sequences."""

    name = "voting"

    def __init__(self) -> None:
        self.params: dict[str, Any] = {}

    def initial_state(self, pid: int, x: int) -> VoteState:
        return VoteState(proposal=x, vote=None, decided=False, decision=None)

    def trace_fields(self, state: VoteState) -> dict[str, Any]:
        return {
            "proposal": state.proposal,
            "locked": None,
            "lockround": None,
            "queue": [],
            "decided": state.decided,
            "decision": state.decision,
            "vote": state.vote,
        }

    def step(self, state: VoteState, view: ProcessView, r: int) -> tuple[VoteState, frozenset[int] | None]:
        proposal, vote, decided, decision = state
        messages = {
            q: (view.state(q, r - 1).vote, view.state(q, r - 1).proposal)
            for q in view.receive_set
        }
        prev_root = estimate_root(view, r - 1) if r >= 2 else None

        votes = {m for (m, _) in messages.values()}
        if None not in votes and len(votes) == 1:
            (v,) = votes
            proposal = v
            vote = v
            if not decided:
                decided, decision = True, v
            return VoteState(proposal, vote, decided, decision), prev_root

        if prev_root is not None:
            dictated = value_of_root(prev_root, messages)
            if dictated is not None:
                return VoteState(dictated, dictated, decided, decision), prev_root

        pending = [m for (m, _) in messages.values() if m is not None]
        if pending:
            # Adopt a received pending vote; pick deterministically.
            chosen = messages[min(q for q in messages if messages[q][0] is not None)][0]
            return VoteState(chosen, None, decided, decision), prev_root  # type: ignore[arg-type]
        return VoteState(proposal, None, decided, decision), prev_root
