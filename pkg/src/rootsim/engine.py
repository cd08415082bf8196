"""Lock-step synchronous execution over a graph sequence.

Processes run a full-information protocol: each round they forward
everything they know along the round's edges, merge what they receive,
and then run the algorithm's round computation. Knowledge is represented
compactly: because a process's round-s state contains its entire history,
"p knows q's round-s state" is equivalent to "s <= lastround_p[q]", so one
integer vector per process captures the whole view. Recorded states live
in a single shared store indexed by (process, round).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Protocol

from .graphs import GraphSequence, in_neighborhood

NEVER = -1


class EngineError(RuntimeError):
    """An algorithm broke its contract during execution."""


class Algorithm(Protocol):
    """The behavior the engine drives, one instance per execution."""

    name: str

    def initial_state(self, pid: int, x: int) -> Any: ...

    def step(self, state: Any, view: "ProcessView", r: int) -> tuple[Any, frozenset[int] | None]:
        """Round computation: returns (new state, detected root or None)."""
        ...

    def trace_fields(self, state: Any) -> dict[str, Any]: ...


class ProcessView:
    """One process's knowledge at the start of its round-r computation.

    `lastround[q]` is the newest round s such that q's round-s state is
    known (NEVER if q was never heard of). The owner's own entry is r-1:
    its round-r state is what the current computation produces. The
    contractual `last_heard` for the owner is nevertheless r, since a
    process trivially hears itself in every round.
    """

    __slots__ = ("owner", "round", "n", "lastround", "_states", "_ins", "receive_set")

    def __init__(
        self,
        owner: int,
        r: int,
        lastround: list[int],
        states: list[list[Any]],
        ins: list[list[frozenset[int]]],
        receive_set: frozenset[int],
    ):
        self.owner = owner
        self.round = r
        self.n = len(lastround)
        self.lastround = lastround
        self._states = states
        self._ins = ins  # ins[s-1][q] = in-neighborhood of q in round s
        self.receive_set = receive_set

    def last_heard(self, q: int) -> int:
        """Largest s with q's round-s state known; r for the owner itself."""
        if q == self.owner:
            return self.round
        return self.lastround[q]

    def last_state_round(self, q: int) -> int:
        """Largest s with a recorded state of q available to read."""
        if q == self.owner:
            return self.round - 1
        return self.lastround[q]

    def knows(self, q: int, s: int) -> bool:
        return 0 <= s <= self.last_heard(q)

    def state(self, q: int, s: int) -> Any:
        if not (0 <= s <= self.last_state_round(q)):
            raise EngineError(
                f"process {self.owner} has no recorded round-{s} state of {q} at round {self.round}"
            )
        return self._states[q][s]

    def states_of(self, q: int) -> list[Any]:
        """The shared state store row for q; entries beyond last_state_round(q)
        are outside this view and must not be read."""
        return self._states[q]

    def in_report(self, q: int, s: int) -> frozenset[int] | None:
        """IN_q of round s as reported by q itself, or None if unknown.

        A round-s report travels inside q's round-s state; additionally the
        owner knows its own current receive set before computing.
        """
        if s < 1:
            return None
        if q == self.owner and s == self.round:
            return self.receive_set
        if s <= self.last_state_round(q):
            return self._ins[s - 1][q]
        return None


@dataclass
class Execution:
    """Complete record of one run: inputs, sequence, states, knowledge."""

    algorithm_name: str
    algorithm_params: dict[str, Any]
    inputs: tuple[int, ...]
    seq: GraphSequence
    states: list[list[Any]]  # states[p][s], s = 0..rounds
    lastrounds: list[tuple[tuple[int, ...], ...]]  # [r-1][p] post-round vector
    detected: list[tuple[frozenset[int] | None, ...]]  # [r-1][p]
    ins: list[list[frozenset[int]]]  # [r-1][q]
    trace_fields: Callable[[Any], dict[str, Any]]

    @property
    def n(self) -> int:
        return self.seq.n

    @property
    def rounds(self) -> int:
        return len(self.lastrounds)

    def state(self, p: int, s: int) -> Any:
        return self.states[p][s]

    def trace_lines(self) -> Iterator[dict[str, Any]]:
        for r in range(1, self.rounds + 1):
            for p in range(self.n):
                entry: dict[str, Any] = {"round": r, "pid": p}
                entry.update(self.trace_fields(self.states[p][r]))
                root = self.detected[r - 1][p]
                entry["detected_root"] = sorted(root) if root is not None else None
                yield entry

    def trace_hash(self) -> str:
        h = hashlib.sha256()
        for line in self.trace_lines():
            h.update(json.dumps(line, sort_keys=True).encode())
        return h.hexdigest()

    def write_trace(self, fh) -> None:
        for line in self.trace_lines():
            fh.write(json.dumps(line) + "\n")


def run(
    algorithm: Algorithm,
    inputs: list[int] | tuple[int, ...],
    seq: GraphSequence,
    horizon: int | None = None,
) -> Execution:
    """Execute `algorithm` over `seq` from the given inputs.

    Deterministic: identical arguments give an identical Execution. Decided
    processes keep running their round computation; only the decision value
    is write-once.
    """
    n = seq.n
    if len(inputs) != n:
        raise ValueError(f"got {len(inputs)} inputs for {n} processes")
    rounds = len(seq) if horizon is None else horizon
    if rounds > len(seq):
        raise ValueError(f"horizon {rounds} exceeds sequence length {len(seq)}")

    states: list[list[Any]] = [[algorithm.initial_state(p, inputs[p])] for p in range(n)]
    lr: list[list[int]] = [[NEVER] * n for _ in range(n)]
    for p in range(n):
        lr[p][p] = 0

    ins_history: list[list[frozenset[int]]] = []
    lastrounds: list[tuple[tuple[int, ...], ...]] = []
    detected_history: list[tuple[frozenset[int] | None, ...]] = []

    for r in range(1, rounds + 1):
        g = seq.graph(r)
        ins = [in_neighborhood(g, p) for p in range(n)]
        ins_history.append(ins)

        merged: list[list[int]] = []
        for p in range(n):
            row = lr[p][:]
            for q in ins[p]:
                if q == p:
                    continue
                other = lr[q]
                for i in range(n):
                    if other[i] > row[i]:
                        row[i] = other[i]
            merged.append(row)

        detected_row: list[frozenset[int] | None] = []
        for p in range(n):
            view = ProcessView(p, r, merged[p], states, ins_history, ins[p])
            try:
                new_state, detected = algorithm.step(states[p][r - 1], view, r)
            except EngineError:
                raise
            except Exception as exc:  # pragma: no cover - contract breach path
                raise EngineError(f"algorithm failed at round {r}, process {p}: {exc}") from exc
            old = states[p][r - 1]
            if getattr(old, "decided", False):
                if not getattr(new_state, "decided", False) or new_state.decision != old.decision:
                    raise EngineError(f"process {p} revoked its decision at round {r}")
            states[p].append(new_state)
            detected_row.append(detected)
            merged[p][p] = r
        lr = merged
        lastrounds.append(tuple(tuple(row) for row in merged))
        detected_history.append(tuple(detected_row))

    return Execution(
        algorithm_name=algorithm.name,
        algorithm_params=dict(getattr(algorithm, "params", {})),
        inputs=tuple(inputs),
        seq=seq,
        states=states,
        lastrounds=lastrounds,
        detected=detected_history,
        ins=ins_history,
        trace_fields=algorithm.trace_fields,
    )


def last_heard(view: ProcessView, q: int) -> int:
    """Module-level alias for the view method (part of the public surface)."""
    return view.last_heard(q)


def views_equal_until(exec1: Execution, exec2: Execution, p: int, r: int) -> bool:
    """Is p's full knowledge identical in both executions through round r?

    Compares, per round: p's recorded state, what it knows of everyone
    (which states, their contents, and the in-edge reports they carry),
    and its own receive set.
    """
    if exec1.n != exec2.n:
        raise ValueError("executions have different process counts")
    if r > exec1.rounds or r > exec2.rounds:
        raise ValueError(f"round {r} not covered by both executions")
    n = exec1.n
    for t in range(1, r + 1):
        if exec1.states[p][t] != exec2.states[p][t]:
            return False
        row1 = exec1.lastrounds[t - 1][p]
        row2 = exec2.lastrounds[t - 1][p]
        if row1 != row2:
            return False
        if exec1.ins[t - 1][p] != exec2.ins[t - 1][p]:
            return False
        for q in range(n):
            for s in range(0, row1[q] + 1):
                if exec1.states[q][s] != exec2.states[q][s]:
                    return False
                if s >= 1 and exec1.ins[s - 1][q] != exec2.ins[s - 1][q]:
                    return False
    return True
