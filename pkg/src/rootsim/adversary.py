"""Admissibility checkers, random sequence generators, and scripted scenarios.

A "message adversary" here is a predicate over graph sequences. The checkers
validate finite prefixes against the three core properties (every graph
rooted, bounded information-propagation diameter, an eventual stable-root
window) plus the non-split and broadcast-window properties used by the
compound-graph voting algorithm.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from typing import Any

from .graphs import (
    CommGraph,
    GraphError,
    GraphSequence,
    causal_past,
    compound_all,
    in_neighborhood,
    single_root,
    star,
)


class GenerationError(RuntimeError):
    """Random sequence generation could not satisfy its constraints."""


@dataclass(frozen=True)
class AdversarySpec:
    """Parameters for generating an admissible random sequence."""

    n: int
    D: int
    x: int
    horizon: int
    seed: int
    stability_start: int | str = "random"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if not (1 <= self.D <= max(1, self.n - 1)):
            raise ValueError(f"need 1 <= D <= n-1, got D={self.D}, n={self.n}")
        if self.x < 1:
            raise ValueError(f"stability length must be >= 1, got {self.x}")
        if self.horizon < self.x + 1:
            raise ValueError(
                f"horizon {self.horizon} too short for a stability window of {self.x}"
            )


@dataclass
class MembershipReport:
    """Result of validating one sequence against the adversary properties."""

    n: int
    rounds: int
    D: int
    x: int
    rooted_ok: bool
    first_unrooted_round: int | None
    diam_ok: bool
    first_diam_violation: dict[str, Any] | None
    stability_windows: list[tuple[int, int, frozenset[int]]]
    stability_ok: bool
    nonsplit_ok: bool
    first_split: tuple[int, int, int] | None
    star_windows: list[tuple[int, int, frozenset[int]]] = field(default_factory=list)

    @property
    def member(self) -> bool:
        """Membership in ROOTED + diameter-D + x-round-stability."""
        return self.rooted_ok and self.diam_ok and self.stability_ok

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "rounds": self.rounds,
            "D": self.D,
            "x": self.x,
            "rooted_ok": self.rooted_ok,
            "first_unrooted_round": self.first_unrooted_round,
            "diam_ok": self.diam_ok,
            "first_diam_violation": self.first_diam_violation,
            "stability_windows": [
                {"start": s, "end": e, "root": sorted(root)}
                for (s, e, root) in self.stability_windows
            ],
            "stability_ok": self.stability_ok,
            "nonsplit_ok": self.nonsplit_ok,
            "first_split": list(self.first_split) if self.first_split else None,
            "star_windows": [
                {"start": s, "end": e, "root": sorted(root)}
                for (s, e, root) in self.star_windows
            ],
            "member": self.member,
        }


def check_rooted(seq: GraphSequence) -> list[bool]:
    """Per-round flag: does round r's graph have exactly one root component?"""
    return [single_root(g) is not None for g in seq]


def stable_runs(seq: GraphSequence) -> list[tuple[int, int, frozenset[int]]]:
    """Maximal runs (start, end, R) of consecutive rounds rooted with the same R.

    Rounds whose graph is not rooted belong to no run.
    """
    runs: list[tuple[int, int, frozenset[int]]] = []
    run_start = 0
    run_root: frozenset[int] | None = None
    for r in seq.rounds():
        root = single_root(seq.graph(r))
        if root is not None and root == run_root:
            continue
        if run_root is not None:
            runs.append((run_start, r - 1, run_root))
        run_root = root
        run_start = r
    if run_root is not None:
        runs.append((run_start, len(seq), run_root))
    return runs


def check_stability(seq: GraphSequence, x: int) -> list[tuple[int, int, frozenset[int]]]:
    """All maximal stable-root runs; the sequence qualifies iff some run >= x.

    The x argument is not used to filter (callers inspect run lengths); it is
    kept in the signature so reports can record the threshold they checked.
    """
    del x
    return stable_runs(seq)


def check_diam(seq: GraphSequence, D: int) -> tuple[bool, dict[str, Any] | None]:
    """Verify the diameter property on every window of D same-root rounds.

    For each window of D consecutive rounds all rooted with the same root R,
    every process must have all of R in its causal past across the window.
    Returns (ok, first violation as a dict or None).
    """
    for start, end, root in stable_runs(seq):
        for r1 in range(start, end - D + 2):
            hi = r1 + D - 1
            for p in range(seq.n):
                cp = causal_past(seq, p, r1 - 1, hi)
                if not root <= cp:
                    return False, {
                        "window_start": r1,
                        "window_end": hi,
                        "process": p,
                        "root": sorted(root),
                        "missing": sorted(root - cp),
                    }
    return True, None


def check_nonsplit(seq: GraphSequence) -> tuple[bool, tuple[int, int, int] | None]:
    """Every pair of processes must share an in-neighbor in every round.

    Self-loops count, so an edge (p, q) alone already covers the pair (p, q).
    Returns (ok, first (round, p, q) violation or None).
    """
    for r in seq.rounds():
        g = seq.graph(r)
        ins = [in_neighborhood(g, p) for p in range(seq.n)]
        for p in range(seq.n):
            for q in range(p + 1, seq.n):
                if not ins[p] & ins[q]:
                    return False, (r, p, q)
    return True, None


def _is_broadcast_root(g: CommGraph, root: frozenset[int]) -> bool:
    """Does every root member have an edge to every other process?"""
    out: dict[int, set[int]] = {p: {p} for p in root}
    for u, v in g.edges:
        if u in root:
            out[u].add(v)
    return all(len(out[p]) == g.n for p in root)


def check_star_window(seq: GraphSequence, y: int) -> list[tuple[int, int, frozenset[int]]]:
    """Windows of >= y consecutive same-root rounds whose root broadcasts.

    A qualifying round is rooted with root R and every member of R has an
    out-edge to all other processes. Returns maximal such runs with
    length >= y.
    """
    windows: list[tuple[int, int, frozenset[int]]] = []
    run_start = 0
    run_root: frozenset[int] | None = None
    for r in seq.rounds():
        g = seq.graph(r)
        root = single_root(g)
        if root is not None and not _is_broadcast_root(g, root):
            root = None
        if root is not None and root == run_root:
            continue
        if run_root is not None and (r - 1) - run_start + 1 >= y:
            windows.append((run_start, r - 1, run_root))
        run_root = root
        run_start = r
    if run_root is not None and len(seq) - run_start + 1 >= y:
        windows.append((run_start, len(seq), run_root))
    return windows


def membership_report(seq: GraphSequence, D: int, x: int) -> MembershipReport:
    """Run all checkers and collect the results in one report."""
    rooted = check_rooted(seq)
    first_unrooted = next((r for r, ok in enumerate(rooted, start=1) if not ok), None)
    diam_ok, diam_violation = check_diam(seq, D)
    windows = stable_runs(seq)
    stability_ok = any(e - s + 1 >= x for (s, e, _) in windows)
    nonsplit_ok, first_split = check_nonsplit(seq)
    return MembershipReport(
        n=seq.n,
        rounds=len(seq),
        D=D,
        x=x,
        rooted_ok=first_unrooted is None,
        first_unrooted_round=first_unrooted,
        diam_ok=diam_ok,
        first_diam_violation=diam_violation,
        stability_windows=windows,
        stability_ok=stability_ok,
        nonsplit_ok=nonsplit_ok,
        first_split=first_split,
        star_windows=check_star_window(seq, 1),
    )


def compound_sequence(seq: GraphSequence) -> GraphSequence:
    """Collapse each block of n-1 consecutive rounds into one compound graph.

    A trailing block shorter than n-1 rounds is dropped with a warning.
    """
    block = seq.n - 1
    if block < 1:
        raise GraphError("compound sequences need at least two processes")
    full, rem = divmod(len(seq), block)
    if rem:
        warnings.warn(
            f"dropping {rem} trailing round(s) not filling a block of {block}",
            stacklevel=2,
        )
    graphs = tuple(
        compound_all(seq.graphs[i * block : (i + 1) * block]) for i in range(full)
    )
    return GraphSequence(seq.n, graphs)


# ---------------------------------------------------------------------------
# Random generation


def _random_root_set(rng: random.Random, n: int, forbid: frozenset[int] | None) -> frozenset[int]:
    """A random nonempty root set differing from `forbid` (if possible)."""
    for _ in range(200):
        size = rng.randint(1, n)
        root = frozenset(rng.sample(range(n), size))
        if root != forbid or n == 1:
            return root
    raise GenerationError("could not draw a fresh root set")


def _random_rooted_graph(
    rng: random.Random,
    n: int,
    root: frozenset[int],
    density: float,
    broadcast: bool = False,
) -> CommGraph:
    """A random graph whose unique root component is exactly `root`.

    The root members are wired into a cycle (strong connectivity), every
    non-root process is attached below the root (rootedness), and no edge
    ever points from outside the root into it (closedness). With
    `broadcast`, every root member additionally reaches everyone directly.
    """
    edges: set[tuple[int, int]] = set()
    members = sorted(root)
    if len(members) > 1:
        ring = members[:]
        rng.shuffle(ring)
        for i, u in enumerate(ring):
            edges.add((u, ring[(i + 1) % len(ring)]))
        for u in members:
            for v in members:
                if u != v and rng.random() < density:
                    edges.add((u, v))
    rest = [p for p in range(n) if p not in root]
    rng.shuffle(rest)
    reachable = members[:]
    for v in rest:
        edges.add((rng.choice(reachable), v))
        reachable.append(v)
    for u in range(n):
        for v in rest:
            if u != v and rng.random() < density:
                edges.add((u, v))
    if broadcast:
        for u in members:
            for v in range(n):
                if u != v:
                    edges.add((u, v))
    return CommGraph(n, frozenset(edges))


def _pick_window_start(spec: AdversarySpec, rng: random.Random) -> int:
    if spec.stability_start == "random":
        hi = min(spec.x + spec.n + 2, spec.horizon - spec.x + 1)
        if hi < 3:
            raise GenerationError(
                f"horizon {spec.horizon} leaves no room for a window starting at round 3"
            )
        return rng.randint(3, hi)
    start = int(spec.stability_start)
    if not (3 <= start and start + spec.x - 1 <= spec.horizon):
        raise ValueError(
            f"stability window must start in [3, horizon-x+1], got {start} "
            f"(horizon {spec.horizon})"
        )
    return start


def generate_stable(spec: AdversarySpec) -> tuple[GraphSequence, tuple[int, int, frozenset[int]]]:
    """A random sequence that is rooted, diameter-D, and x-round stable.

    Returns the sequence plus its designated stable window (start, end, R).
    The root set changes every round outside the window and never equals
    the window's root, so the only same-root windows the diameter property
    constrains are inside the designated window; those are drawn until the
    causal-past check passes (denser redraws, then a root broadcast as a
    last resort). For D = 1 every single round is constrained, so all
    roots broadcast.

    Two extra structural guarantees make the pre-stability phase legible
    to root-history bookkeeping: round 1's root is a singleton {c} and c
    also belongs to round 2's root and broadcasts there, so from round 2
    on every process can reconstruct round 1's root; the window starts at
    round 3 or later so this anchor always precedes it.

    The output is re-validated with the checkers; failure raises
    GenerationError rather than returning an unvalidated sequence.
    """
    rng = random.Random(spec.seed)
    n, D, x = spec.n, spec.D, spec.x
    if n < 2:
        raise GenerationError("generation needs n >= 2 (round 2's root must differ from round 1's)")
    a = _pick_window_start(spec, rng)
    b = a + x - 1

    anchor = rng.randrange(n)
    anchor_root = frozenset({anchor})
    window_root = _random_root_set(rng, n, None)
    # For n = 2 the full set is excluded, or no valid round-2 root exists.
    while window_root == anchor_root or (n == 2 and len(window_root) == n):
        window_root = _random_root_set(rng, n, None)

    graphs: list[CommGraph] = []
    prev_root: frozenset[int] | None = None
    for r in range(1, spec.horizon + 1):
        in_window = a <= r <= b
        if r == 1:
            root = anchor_root
            g = _random_rooted_graph(rng, n, root, density=0.25, broadcast=(D == 1))
        elif r == 2:
            # Round 2's root contains the anchor, which broadcasts so that
            # everyone learns round 1's receive reports this round.
            root = anchor_root | _random_root_set(rng, n, None)
            tries = 0
            while root in (anchor_root, window_root):
                root = anchor_root | _random_root_set(rng, n, None)
                tries += 1
                if tries > 200:
                    raise GenerationError("cannot draw a round-2 root")
            g = _random_rooted_graph(rng, n, root, density=0.25, broadcast=(D == 1))
            g = CommGraph(n, g.edges | frozenset((anchor, v) for v in range(n) if v != anchor))
        elif in_window:
            root = window_root
            g = _random_rooted_graph(rng, n, root, density=0.25, broadcast=(D == 1))
        else:
            root = _random_root_set(rng, n, prev_root)
            tries = 0
            while root == window_root:
                root = _random_root_set(rng, n, prev_root)
                tries += 1
                if tries > 200:
                    raise GenerationError("cannot avoid the designated root outside the window")
            g = _random_rooted_graph(rng, n, root, density=0.25, broadcast=(D == 1))
        graphs.append(g)
        prev_root = root

        # Re-draw the newest round until every D-window of same-root rounds
        # ending here satisfies the causal-past requirement.
        if in_window and D > 1 and r - a + 1 >= D:
            for attempt in range(12):
                seq_so_far = GraphSequence(n, tuple(graphs))
                r1 = r - D + 1
                ok = all(
                    window_root <= causal_past(seq_so_far, p, r1 - 1, r)
                    for p in range(n)
                )
                if ok:
                    break
                density = min(0.9, 0.3 + 0.08 * attempt)
                graphs[-1] = _random_rooted_graph(
                    rng, n, root, density=density, broadcast=(attempt >= 8)
                )
            else:
                raise GenerationError("diameter constraint unsatisfiable in stable window")

    seq = GraphSequence(n, tuple(graphs))
    report = membership_report(seq, D, x)
    if not report.member:
        raise GenerationError(f"generated sequence failed validation: {report.to_json()}")
    if not any(s == a and e == b and root == window_root for (s, e, root) in report.stability_windows):
        raise GenerationError(f"designated window ({a},{b}) not maximal in output")
    return seq, (a, b, window_root)


def generate_rooted(
    n: int, horizon: int, seed: int, stable_len: int = 0, stability_start: int | None = None
) -> tuple[GraphSequence, tuple[int, int, frozenset[int]] | None]:
    """A random all-rooted sequence, optionally with one stable-root window.

    No diameter constraint beyond the one every rooted sequence satisfies
    automatically (n-1 rounds always suffice for a stable root's information
    to spread). Returns the sequence and the designated window, if any.
    """
    rng = random.Random(seed)
    window: tuple[int, int, frozenset[int]] | None = None
    a = b = -1
    window_root: frozenset[int] = frozenset()
    if stable_len:
        if stability_start is None:
            a = rng.randint(1, max(1, horizon - stable_len + 1))
        else:
            a = stability_start
        b = a + stable_len - 1
        if b > horizon:
            raise ValueError(f"stable window ({a},{b}) exceeds horizon {horizon}")
        window_root = _random_root_set(rng, n, None)
        window = (a, b, window_root)

    graphs: list[CommGraph] = []
    prev_root: frozenset[int] | None = None
    for r in range(1, horizon + 1):
        if a <= r <= b:
            root = window_root
        else:
            root = _random_root_set(rng, n, prev_root)
            tries = 0
            while (r == a - 1 or r == b + 1) and root == window_root:
                root = _random_root_set(rng, n, prev_root)
                tries += 1
                if tries > 200:
                    raise GenerationError("cannot avoid the designated root at the window edge")
        graphs.append(_random_rooted_graph(rng, n, root, density=0.25))
        prev_root = root
    seq = GraphSequence(n, tuple(graphs))
    if not all(check_rooted(seq)):
        raise GenerationError("generated sequence has an unrooted round")
    return seq, window


# ---------------------------------------------------------------------------
# Scripted scenarios

SCENARIO_NAMES = (
    "indist-a",
    "indist-b",
    "chain-a",
    "chain-b",
    "chain-c",
    "chain-d",
    "lossy-link",
)


def _with_undepicted(n: int, depicted: range, edges: set[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    """Add an edge from every depicted process to every undepicted one."""
    full = set(edges)
    for u in depicted:
        for v in range(n):
            if v not in depicted:
                full.add((u, v))
    return frozenset(full)


def _chain(lo: int, hi: int) -> set[tuple[int, int]]:
    """Edges (lo,lo+1), ..., (hi-1,hi)."""
    return {(i, i + 1) for i in range(lo, hi)}


def scenario_indist_a(n: int, D: int, horizon: int, dotted_first: bool = True) -> GraphSequence:
    """First sequence of the indistinguishability pair.

    Rounds 1..2D-1: a chain from process 0 fanning out to D and D+1, with
    processes D+2.. fed by every depicted process. From round 2D on, the
    two processes D and D+1 form an isolated alternating gadget feeding
    back into process 0.
    """
    if D < 1 or n <= D + 2:
        raise ValueError(f"need n >= D+3, got n={n}, D={D}")
    if horizon < 2 * D:
        raise ValueError(f"horizon {horizon} does not reach the second phase (round {2 * D})")
    depicted = range(D + 2)
    pre = _with_undepicted(n, depicted, _chain(0, D - 1) | {(D - 1, D), (D - 1, D + 1)})
    graphs = [CommGraph(n, pre)] * (2 * D - 1)
    base = _chain(0, D - 1) | {(D, D + 1), (D + 1, 0)}
    for r in range(2 * D, horizon + 1):
        edges = set(base)
        if ((r - 2 * D) % 2 == 0) == dotted_first:
            edges.add((D + 1, D))
        graphs.append(CommGraph(n, _with_undepicted(n, depicted, edges)))
    return GraphSequence(n, tuple(graphs))


def scenario_indist_b(
    n: int, D: int, tau: int, horizon: int, dotted_first: bool = True
) -> GraphSequence:
    """Second sequence of the pair: same gadget view, different root history.

    All processes are wired explicitly (a trailing chain replaces the
    depicted-to-undepicted edges), an alternating back-edge into process 0
    appears from round D, and from round tau+1 the last process broadcasts
    forever, forming the eventual stable root.
    """
    if D < 1 or n <= D + 2:
        raise ValueError(f"need n >= D+3, got n={n}, D={D}")
    if tau < 2 * D:
        raise ValueError(f"need tau >= 2D, got tau={tau}, D={D}")
    if horizon <= tau:
        raise ValueError(f"horizon {horizon} must extend past tau={tau}")
    early = _chain(0, D - 1) | {(D - 1, D), (D - 1, D + 1)} | _chain(D + 1, n - 1)
    graphs = [CommGraph(n, frozenset(early))] * (D - 1)
    for r in range(D, 2 * D):
        edges = set(early)
        if ((r - D) % 2 == 0) == dotted_first:
            edges.add((1, 0))
        graphs.append(CommGraph(n, frozenset(edges)))
    mid = _chain(0, D - 1) | {(D, D + 1), (D + 1, 0), (D - 1, D + 2)} | _chain(D + 2, n - 1)
    for r in range(2 * D, tau + 1):
        edges = set(mid)
        if ((r - 2 * D) % 2 == 0) == dotted_first:
            edges.add((D + 1, D))
        graphs.append(CommGraph(n, frozenset(edges)))
    graphs.extend([star(n - 1, n)] * (horizon - tau))
    return GraphSequence(n, tuple(graphs))


def _chain_gadget(n: int, D: int, variant: str) -> CommGraph:
    """The four single-graph gadgets used by the decision-deadline scenarios."""
    if D < 1 or n < D + 1:
        raise ValueError(f"need n >= D+1, got n={n}, D={D}")
    if variant == "a":
        edges = _chain(0, D)
    elif variant == "b":
        edges = _chain(0, D) | {(1, 0)}
    elif variant == "c":
        edges = {(0, 1), (1, 0), (0, 2)} | _chain(2, D)
    elif variant == "d":
        edges = {(1, 0), (0, 2)} | _chain(2, D)
    else:
        raise ValueError(f"unknown chain variant {variant!r}")
    if D == 1 and variant in ("c", "d"):
        raise ValueError(f"chain-{variant} needs D >= 2")
    return CommGraph(n, _with_undepicted(n, range(D + 1), set(edges)))


def scenario_lossy_link(horizon: int, seed: int) -> GraphSequence:
    """Two processes; each round exactly one direction gets through."""
    rng = random.Random(seed)
    graphs = tuple(
        CommGraph(2, frozenset({(0, 1) if rng.random() < 0.5 else (1, 0)}))
        for _ in range(horizon)
    )
    return GraphSequence(2, graphs)


def scenario(name: str, **params: Any) -> GraphSequence:
    """Build a scripted sequence by name; see SCENARIO_NAMES."""
    if name == "indist-a":
        return scenario_indist_a(
            params["n"], params["D"], params["horizon"], params.get("dotted_first", True)
        )
    if name == "indist-b":
        return scenario_indist_b(
            params["n"],
            params["D"],
            params["tau"],
            params["horizon"],
            params.get("dotted_first", True),
        )
    if name.startswith("chain-") and name[len("chain-") :] in "abcd":
        g = _chain_gadget(params["n"], params["D"], name[len("chain-") :])
        return GraphSequence(g.n, (g,) * params.get("horizon", 1))
    if name == "lossy-link":
        return scenario_lossy_link(params["horizon"], params.get("seed", 0))
    raise ValueError(f"unknown scenario {name!r}; known: {', '.join(SCENARIO_NAMES)}")
