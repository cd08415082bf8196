"""An under-approximating root-component estimator over process views.

A process that has collected the round-s receive reports of a set R which
is (a) closed (no member reports an in-neighbor outside R) and (b) strongly
connected under those reported edges has genuinely found a root component
of the round-s graph: reports are true in-neighborhoods, so a closed
strongly connected set is a root component by definition. On sequences
where every graph is rooted this set is unique, which makes the estimate
sound; completeness after a long-enough stable window follows because the
window pushes every root member's round-s state to everyone.
"""

from __future__ import annotations

from .engine import ProcessView


def estimate_root(view: ProcessView, s: int, r: int | None = None) -> frozenset[int] | None:
    """Estimate the root component of the round-s graph, or None if unsure.

    Returns a set R iff exactly one set exists whose members' round-s
    receive reports are all known, all contained in R, and strongly
    connected under the reported edges.
    """
    if r is None:
        r = view.round
    if s > r:
        raise ValueError(f"cannot estimate round {s} from round {r}")
    if s < 1:
        raise ValueError(f"round index must be >= 1, got {s}")
    n = view.n
    reports: list[frozenset[int] | None] = [view.in_report(q, s) for q in range(n)]
    known = [q for q in range(n) if reports[q] is not None]
    if not known:
        return None

    # Tarjan over the reported subgraph; a member with an unreported
    # in-neighbor can never belong to a fully-reported closed set.
    known_set = set(known)
    preds = {q: [u for u in reports[q] if u != q and u in known_set] for q in known}

    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = 0
    candidates: list[frozenset[int]] = []

    for start in known:
        if start in index:
            continue
        work = [(start, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            advanced = False
            plist = preds[v]
            for i in range(pi, len(plist)):
                w = plist[i]
                if w not in index:
                    work[-1] = (v, i + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if w in on_stack:
                    if index[w] < low[v]:
                        low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = set()
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.add(w)
                    if w == v:
                        break
                if all(reports[q] <= comp for q in comp):  # type: ignore[operator]
                    candidates.append(frozenset(comp))
            if work:
                u, _ = work[-1]
                if low[v] < low[u]:
                    low[u] = low[v]

    if len(candidates) == 1:
        return candidates[0]
    return None


def estimate_prev_root(view: ProcessView, r: int | None = None) -> frozenset[int] | None:
    """Estimate the root of the previous round's graph."""
    if r is None:
        r = view.round
    if r < 2:
        raise ValueError(f"no previous round to estimate at round {r}")
    return estimate_root(view, r - 1, r)
