"""Periodic edge-activation schedules for relay networks.

A schedule assigns each directed edge a set of slots inside a cycle of
N slots; an edge repeats its slots every cycle. Relays hold one symbol
and forward the last value they heard, so a schedule determines the
whole data flow. The synthesis routines here cover parallel-path
colorings for every K, almost-continuous activation with delay
balancing for networks with inter-path links, buffered operation when
a direct source-sink link exists, staggered full-duplex activation and
pairwise path activation for fully connected layered networks.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from heapq import heappop, heappush

from .netgraph import (
    Network, PathSet, classify, edge_disjoint_paths, forward_paths,
    is_relay_bank, kpp_network)


class SchedulingError(ValueError):
    """The requested schedule cannot be built for this input."""


class DelaySearchError(SchedulingError):
    """Bounded delay search ended without a feasible assignment."""


@dataclass(frozen=True)
class Schedule:
    """Periodic activation plan.

    ``activations`` maps a directed edge (tail, head) to its slot set
    within one cycle. ``path_counts`` holds the per-path symbol counts
    m_i for path-structured schedules. ``deliveries`` maps each sink
    reception slot to the index of the path whose symbol lands there
    (the direct link, when buffered, is bookkept separately).
    """

    cycle_length: int
    activations: dict
    backbone: PathSet | None = None
    path_counts: tuple = ()
    added_delays: dict = field(default_factory=dict)
    steady_state_delay: int = 0
    direct_link_mode: str = "none"
    buffer_primes: dict = field(default_factory=dict)
    symbols_per_cycle: int = 0
    deliveries: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def rate(self) -> Fraction:
        return Fraction(self.symbols_per_cycle, self.cycle_length)

    def slots_of(self, tail: str, head: str) -> frozenset:
        return self.activations.get((tail, head), frozenset())

    def transmit_slots(self, node: str) -> set:
        out = set()
        for (tail, _), slots in self.activations.items():
            if tail == node:
                out |= slots
        return out

    def receive_slots(self, node: str) -> set:
        out = set()
        for (_, head), slots in self.activations.items():
            if head == node:
                out |= slots
        return out


@dataclass(frozen=True)
class OrthogonalityReport:
    ok: bool
    constraints: dict
    backflow_nodes: tuple
    rate: Fraction
    messages: tuple = ()

    @property
    def backflow_free(self) -> bool:
        return not self.backflow_nodes


def _path_edges(path):
    return list(zip(path, path[1:]))


def validate_orthogonal(net: Network, sched: Schedule) -> OrthogonalityReport:
    """Check the four coloring constraints plus the back-flow scan.

    Constraint 1: first-edge slot sets disjoint across paths.
    Constraint 2: last-edge slot sets disjoint across paths.
    Constraint 3: consecutive edges on a path never share a slot.
    Constraint 4: every edge of path i is active exactly m_i times.
    Back-flow (a relay hears a node two hops downstream) is legal but
    reported: it exists at the head of edge j when A_j meets A_{j+2}.
    """
    if sched.backbone is None:
        raise SchedulingError("schedule carries no path decomposition")
    msgs = []
    for pair in sched.activations:
        if pair not in net.edge_set:
            raise SchedulingError(f"schedule activates missing edge {pair}")
    paths = list(sched.backbone)
    slot_sets = []
    for path in paths:
        slot_sets.append([sched.slots_of(t, h) for t, h in _path_edges(path)])
        for s in slot_sets[-1]:
            if any(x < 0 or x >= sched.cycle_length for x in s):
                raise SchedulingError("slot outside cycle")

    firsts = [s[0] for s in slot_sets]
    lasts = [s[-1] for s in slot_sets]
    c1 = all(not (a & b) for a, b in itertools.combinations(firsts, 2))
    c2 = all(not (a & b) for a, b in itertools.combinations(lasts, 2))
    if not c1:
        msgs.append("first-edge slot sets overlap")
    if not c2:
        msgs.append("last-edge slot sets overlap")

    c3 = True
    for i, sets in enumerate(slot_sets):
        for j in range(len(sets) - 1):
            if sets[j] & sets[j + 1]:
                c3 = False
                msgs.append(f"path {i} edges {j},{j + 1} share a slot")

    c4 = True
    counts = []
    for i, sets in enumerate(slot_sets):
        sizes = {len(s) for s in sets}
        if len(sizes) != 1:
            c4 = False
            msgs.append(f"path {i} has unequal activation counts {sorted(sizes)}")
            counts.append(min(sizes))
        else:
            counts.append(sizes.pop())

    backflow = []
    for path, sets in zip(paths, slot_sets):
        for j in range(len(sets) - 2):
            if sets[j] & sets[j + 2]:
                backflow.append(path[j + 1])

    rate = Fraction(sum(counts), sched.cycle_length)
    constraints = {
        "first_edges_disjoint": c1,
        "last_edges_disjoint": c2,
        "half_duplex": c3,
        "equal_activation_counts": c4,
    }
    return OrthogonalityReport(
        ok=all(constraints.values()),
        constraints=constraints,
        backflow_nodes=tuple(backflow),
        rate=rate,
        messages=tuple(msgs),
    )


# ---------------------------------------------------------------------------
# schedule assembly helpers

def _resolve_backbone(lengths, net):
    """Return (net, paths) for the given lengths, building a plain
    parallel-path network when none is supplied."""
    if net is None:
        net = kpp_network(lengths)
    cls = classify(net)
    if cls.backbone is None:
        raise SchedulingError(f"network is {cls.label}, need parallel paths")
    paths = list(cls.backbone)
    if tuple(len(p) - 1 for p in paths) != tuple(lengths):
        raise SchedulingError("lengths do not match the network's paths")
    return net, paths


def _assemble(net, paths, colors, N, *, delays=None, params=None):
    """Build a Schedule from per-path per-edge single colors (m_i = 1)."""
    activations = {}
    deliveries = {}
    for i, (path, cols) in enumerate(zip(paths, colors)):
        for (tail, head), c in zip(_path_edges(path), cols):
            activations[(tail, head)] = frozenset({c % N})
        deliveries[cols[-1] % N] = i
    sched = Schedule(
        cycle_length=N,
        activations=activations,
        backbone=PathSet(tuple(tuple(p) for p in paths)),
        path_counts=(1,) * len(paths),
        added_delays=dict(delays or {}),
        symbols_per_cycle=len(paths),
        steady_state_delay=N * _ceil_div(_max_span(paths, colors, N), N),
        deliveries=deliveries,
        params=dict(params or {}),
    )
    return sched


def _ceil_div(a, b):
    return -(-a // b)


def _max_span(paths, colors, N):
    # end-to-end slot span of each path; strictly increasing color lists
    # are absolute slot numbers, anything else advances by the smallest
    # positive step consistent with the residues
    worst = 1
    for cols in colors:
        if all(b > a for a, b in zip(cols, cols[1:])):
            span = cols[-1] - cols[0] + 1
        else:
            t = cols[0]
            for a, b in zip(cols, cols[1:]):
                step = (b - a) % N
                t += step if step else N
            span = t - cols[0] + 1
        worst = max(worst, span)
    return worst


# ---------------------------------------------------------------------------
# parallel-path colorings

def color_kpp_general(lengths, net=None) -> Schedule:
    """Rate-1 coloring for K >= 4 paths: cycle the first three slots
    i, i+1, i+2 along each path and close with slot i+3. Back-flow free
    for every K >= 4 and all lengths >= 2."""
    K = len(lengths)
    if K < 4:
        raise SchedulingError("need at least four paths")
    if any(n < 2 for n in lengths):
        raise SchedulingError("paths must have at least two edges")
    net, paths = _resolve_backbone(lengths, net)
    colors = []
    for i, n in enumerate(lengths):
        cols = [(i + (j % 3)) % K for j in range(n - 1)]
        cols.append((i + 3) % K)
        colors.append(cols)
    return _assemble(net, paths, colors, K)


def color_kpp_three(lengths, net=None) -> Schedule:
    """Rate-1 coloring for exactly three paths.

    The construction depends on l, the number of path lengths that are
    1 mod 3. Paths with such lengths are moved to the front (stable
    order), colored from a per-case table, and mapped back. For l = 2
    the table cannot close the third path without letting one relay
    hear two hops downstream; the slot overrides below confine that to
    a single node. When the third path has only two edges even that is
    impossible, and the fallback puts one such node on each of the
    first two paths instead.
    """
    if len(lengths) != 3:
        raise SchedulingError("need exactly three paths")
    if any(n < 2 for n in lengths):
        raise SchedulingError("paths must have at least two edges")
    net, paths = _resolve_backbone(lengths, net)

    order = sorted(range(3), key=lambda i: 0 if lengths[i] % 3 == 1 else 1)
    n = [lengths[i] for i in order]
    l = sum(1 for x in n if x % 3 == 1)

    def cyclic(table, length):
        return [table[j % 3] for j in range(length)]

    if l == 0:
        tables = [
            [p, (p + 2) % 3, (p + 1) % 3] if n[p] % 3 == 0
            else [p, (p + 1) % 3, (p + 2) % 3]
            for p in range(3)
        ]
        cols = [cyclic(tables[p], n[p]) for p in range(3)]
    elif l == 1:
        t1 = [1, 0, 2] if n[1] % 3 == 0 else [1, 2, 0]
        t2 = [2, 0, 1] if n[2] % 3 == 0 else [2, 1, 0]
        cols = [cyclic([0, 1, 2], n[0]), cyclic(t1, n[1]), cyclic(t2, n[2])]
    elif l == 3:
        cols = [cyclic([p, (p + 1) % 3, (p + 2) % 3], n[p]) for p in range(3)]
    elif n[2] > 2:
        cols = [cyclic([p, (p + 1) % 3, (p + 2) % 3], n[p]) for p in range(3)]
        cols[2][n[2] - 1] = 2
        if n[2] % 3 == 2:
            cols[2][n[2] - 2] = 0
    else:
        # third path is a two-edge path: close it as [2, 0] and bend the
        # two long paths instead, one downstream-overlap node on each
        cols = [cyclic([p, (p + 1) % 3, (p + 2) % 3], n[p]) for p in range(3)]
        cols[0][n[0] - 1] = 1
        cols[1][n[1] - 1] = 2
        cols[2] = [2, 0]

    unsorted_cols = [None] * 3
    for pos, i in enumerate(order):
        unsorted_cols[i] = cols[pos]
    return _assemble(net, paths, unsorted_cols, 3)


def color_kpp_two(n1, n2, net=None) -> Schedule:
    """Maximum-rate coloring for two paths, n1 <= n2.

    Even n1 + n2: two slots suffice, alternating around the cycle
    formed by the two paths, rate 1. Odd n1 + n2: cycle length 2*n2;
    the short path runs on slot parity alone while the long path sends
    n2 - 1 staggered waves, each wave pausing one slot at a point that
    recedes one hop per wave. Rate (2*n2 - 1) / (2*n2), which is the
    maximum any orthogonal schedule can reach here.
    """
    if not (2 <= n1 <= n2):
        raise SchedulingError("need 2 <= n1 <= n2")
    net, paths = _resolve_backbone((n1, n2), net)

    if (n1 + n2) % 2 == 0:
        colors = [[j % 2 for j in range(n1)],
                  [(n1 + n2 - k - 1) % 2 for k in range(n2)]]
        return _assemble(net, paths, colors, 2)

    N = 2 * n2
    activations = {}
    deliveries = {}
    short_sets = [frozenset(s for s in range(N) if s % 2 == j % 2) for j in range(n1)]
    long_sets = []
    for j in range(n2):
        slots = set()
        for w in range(n2 - 1):
            q = n2 - w
            slots.add((2 * w + 1 + j + (1 if j + 1 >= q else 0)) % N)
        long_sets.append(frozenset(slots))
    for (tail, head), s in zip(_path_edges(paths[0]), short_sets):
        activations[(tail, head)] = s
    for (tail, head), s in zip(_path_edges(paths[1]), long_sets):
        activations[(tail, head)] = s
    for s in short_sets[-1]:
        deliveries[s] = 0
    for s in long_sets[-1]:
        deliveries[s] = 1
    return Schedule(
        cycle_length=N,
        activations=activations,
        backbone=PathSet(tuple(tuple(p) for p in paths)),
        path_counts=(n2, n2 - 1),
        symbols_per_cycle=2 * n2 - 1,
        steady_state_delay=N,
        deliveries=deliveries,
    )


def color_regular(K, L, net=None) -> Schedule:
    """Continuous coloring for K paths of L+1 edges: edge j of path i
    is active in slot (i + j) mod K."""
    if K < 2 or L < 1:
        raise SchedulingError("need K >= 2 and L >= 1")
    lengths = (L + 1,) * K
    net, paths = _resolve_backbone(lengths, net)
    colors = [[(i + j) % K for j in range(L + 1)] for i in range(K)]
    return _assemble(net, paths, colors, K)


# ---------------------------------------------------------------------------
# almost-continuous activation

def _lex_matching(allowed):
    """Lexicographically smallest complete matching, or None.

    ``allowed[i]`` is the sorted candidate list for left vertex i; the
    result assigns a distinct value to each i, chosen greedily with
    backtracking so earlier vertices get the smallest workable value.
    """
    n = len(allowed)
    pick = [None] * n
    used = set()

    def place(i):
        if i == n:
            return True
        for c in allowed[i]:
            if c not in used:
                pick[i] = c
                used.add(c)
                if place(i + 1):
                    return True
                used.remove(c)
        return False

    return pick if place(0) else None


def almost_continuous_schedule(lengths, net=None, delays=None) -> Schedule:
    """Rate-1 schedule where every relay past the first forwards in the
    next slot (plus any per-node added delay).

    Path start slots are the path indices after a stable sort by length
    mod K (delays included), which guarantees the last-edge slots can
    be matched to distinct values for K >= 3. The only scheduling
    freedom is a pause at each path's first relay; it is set by a
    lexicographically smallest matching of paths to closing slots.
    """
    K = len(lengths)
    if K < 3:
        raise SchedulingError("need at least three paths")
    net, paths = _resolve_backbone(lengths, net)
    delays = dict(delays or {})
    for node, d in delays.items():
        if d < 0:
            raise SchedulingError(f"negative delay at {node!r}")
    for path in paths:
        for v in path[2:-1]:
            if (1 + delays.get(v, 0)) % K == 0:
                raise SchedulingError(
                    f"delay at {v!r} makes a relay forward in its own slot")

    def interior_delay(path):
        # delays at relays past the first; the first relay's pause is
        # the matching's free variable, so its delay is folded away
        return sum(delays.get(v, 0) for v in path[2:-1])

    eff = [lengths[i] + interior_delay(paths[i]) for i in range(K)]
    order = sorted(range(K), key=lambda i: eff[i] % K)

    forbidden = []
    allowed = []
    for pos, i in enumerate(order):
        f = (pos + eff[i] - 2) % K
        forbidden.append(f)
        allowed.append([c for c in range(K) if c != f])
    pick = _lex_matching(allowed)
    if pick is None:
        if not delays:
            raise AssertionError("no closing-slot matching for K >= 3")
        raise SchedulingError("delays leave no closing-slot matching")

    colors = [None] * K
    for pos, i in enumerate(order):
        path, n = paths[i], lengths[i]
        base = pos + n - 1 + interior_delay(path) + delays.get(path[1], 0)
        pause = (pick[pos] - base) % K
        # a zero-mod-K hold at the first relay would need pick to equal
        # the forbidden color, which the matching excludes
        assert (1 + delays.get(path[1], 0) + pause) % K != 0
        t = pos
        cols = [t]
        for j in range(1, n):
            t += 1 + delays.get(path[j], 0) + (pause if j == 1 else 0)
            cols.append(t)
        colors[i] = cols
    return _assemble(net, paths, colors, K, delays=delays)


@dataclass(frozen=True)
class CausalReport:
    per_path: tuple  # (condition1, condition2) per backbone path
    details: tuple = ()

    @property
    def ok(self) -> bool:
        return all(a and b for a, b in self.per_path)


def _dijkstra_counted(net, delays, start):
    """Shortest delays from start, counting shortest routes (capped at 2).

    Edge (u, v) costs 1 plus the added delay of v, so a route's cost is
    its hop count plus the delays of the nodes it forwards through;
    callers subtract the target's own delay.
    """
    dist = {start: 0}
    count = {start: 1}
    heap = [(0, start)]
    done = set()
    while heap:
        d, u = heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v in net.out_neighbors[u]:
            w = d + 1 + delays.get(v, 0)
            if v not in dist or w < dist[v]:
                dist[v] = w
                count[v] = count[u]
                heappush(heap, (w, v))
            elif w == dist[v] and v not in done:
                count[v] = min(2, count[v] + count[u])
    return dist, count


def check_causal_interference(net: Network, sched: Schedule) -> CausalReport:
    """Path-length conditions under which leakage cannot outrun data.

    For each backbone path with first relay v and last relay u, using
    hop counts plus added node delays:
    condition 1 - no route from v to the sink is shorter than the
    backbone tail; condition 2 - the backbone segment is the unique
    shortest route from v to u.
    """
    if sched.backbone is None:
        raise SchedulingError("schedule carries no path decomposition")
    delays = sched.added_delays
    results = []
    details = []
    for path in sched.backbone:
        v, u, d = path[1], path[-2], path[-1]
        tail_weight = (len(path) - 2) + sum(delays.get(w, 0) for w in path[2:-1])
        dist, count = _dijkstra_counted(net, delays, v)
        c1 = d in dist and dist[d] - delays.get(d, 0) == tail_weight
        if v == u:
            c2 = True  # two-edge path: the segment is the node itself
        else:
            seg_weight = (len(path) - 3) + sum(delays.get(w, 0) for w in path[2:-2])
            du = dist.get(u)
            c2 = du is not None and du - delays.get(u, 0) == seg_weight \
                and count[u] == 1
        results.append((bool(c1), bool(c2)))
        details.append(f"path via {v}: tail {tail_weight}, shortest {dist.get(d)}")
    return CausalReport(per_path=tuple(results), details=tuple(details))


def balance_delays_kpp3(net: Network, per_node_bound=None, total_bound=None) -> dict:
    """Search added node delays making both causal conditions hold.

    Iterative deepening on the total added delay; within a budget,
    assignments are enumerated lexicographically over the backbone
    relays, so the result is deterministic. A delay on a path's first
    relay only matters to other paths' leak routes (its own forwarding
    pause is already a free variable), but that is exactly what makes
    some shortcuts fixable. Raises DelaySearchError when the bounded
    search is exhausted.
    """
    cls = classify(net)
    if cls.backbone is None or cls.K != 3:
        raise SchedulingError("need a three-path network")
    lengths = cls.backbone.lengths
    K = 3
    if per_node_bound is None:
        per_node_bound = 2 * max(lengths)
    if total_bound is None:
        total_bound = per_node_bound

    def probe(delays):
        sched = Schedule(
            cycle_length=K, activations={}, backbone=cls.backbone,
            added_delays=delays, symbols_per_cycle=K)
        return check_causal_interference(net, sched).ok

    if probe({}):
        return {}
    firsts = {path[1] for path in cls.backbone}
    nodes = []
    for path in cls.backbone:
        for v in path[1:-1]:
            if v not in nodes:
                nodes.append(v)
    # interior relays must not be told to forward in their own slot
    values = {
        v: [d for d in range(per_node_bound + 1)
            if v in firsts or (1 + d) % K != 0]
        for v in nodes
    }

    def assign(idx, remaining, current):
        if remaining == 0:
            return dict(current) if probe(current) else None
        if idx == len(nodes):
            return None
        for d in values[nodes[idx]]:
            if d > remaining:
                break
            if d:
                current[nodes[idx]] = d
            found = assign(idx + 1, remaining - d, current)
            if found is not None:
                return found
            current.pop(nodes[idx], None)
        return None

    for total in range(1, total_bound + 1):
        found = assign(0, total, {})
        if found is not None:
            return found
    raise DelaySearchError(
        f"no delay assignment up to total {total_bound} satisfies the "
        f"causal-interference conditions")


def _restrict_to_paths(net: Network, paths):
    """Sub-network spanned by the given backbone paths."""
    keep = {net.source.id, net.sink.id}
    for p in paths:
        keep |= set(p)
    nodes = [n for n in net.nodes if n.id in keep]
    edges = [e for e in net.edges if e.tail in keep and e.head in keep]
    return Network(nodes, edges, name=net.name)


def kppI_schedule(net: Network, frames_per_segment=None) -> Schedule:
    """Schedule for parallel paths with inter-path links, K >= 3.

    K = 3: balance delays, then run the almost-continuous schedule.
    K > 3: activate every 3-path sub-network in its own segment of
    3 * frames slots; symbols parked mid-path when a segment ends
    resume when the path is next activated, so each path still lands
    one symbol per frame of every segment containing it.
    """
    cls = classify(net)
    if cls.backbone is None or cls.K < 3:
        raise SchedulingError("need at least three parallel paths")
    paths = list(cls.backbone)
    lengths = [len(p) - 1 for p in paths]
    K = cls.K
    if K == 3:
        delays = balance_delays_kpp3(net)
        return almost_continuous_schedule(lengths, net, delays)

    if frames_per_segment is None:
        frames_per_segment = max(lengths)
    F = frames_per_segment
    combos = list(itertools.combinations(range(K), 3))
    N = len(combos) * 3 * F
    activations = {pair: set() for path in paths for pair in _path_edges(path)}
    deliveries = {}
    appearances = len(list(itertools.combinations(range(K - 1), 2)))
    for seg, combo in enumerate(combos):
        sub_paths = [paths[i] for i in combo]
        sub_net = _restrict_to_paths(net, sub_paths)
        delays = balance_delays_kpp3(sub_net)
        sub = almost_continuous_schedule(
            tuple(lengths[i] for i in combo), sub_net, delays)
        offset = seg * 3 * F
        for pair, slots in sub.activations.items():
            for s in slots:
                for f in range(F):
                    activations[pair].add(offset + f * 3 + s)
        for s, local_i in sub.deliveries.items():
            for f in range(F):
                deliveries[offset + f * 3 + s] = combo[local_i]
    return Schedule(
        cycle_length=N,
        activations={p: frozenset(s) for p, s in activations.items()},
        backbone=cls.backbone,
        path_counts=(appearances * F,) * K,
        symbols_per_cycle=K * appearances * F,
        steady_state_delay=N,
        deliveries=deliveries,
        params={"segments": len(combos), "frames_per_segment": F},
    )


# ---------------------------------------------------------------------------
# direct link: buffered operation

def kppD_schedule(net: Network, base: Schedule | None = None) -> Schedule:
    """Backbone coloring plus a direct link used in every slot.

    Requires a back-flow-free rate-1 backbone schedule (any K >= 4, or
    K = 3 with at most one length equal to 1 mod 3 or all three). The
    source sends a fresh symbol on the direct link every slot; each
    relay feeding the sink buffers arrivals in a queue primed so that
    all relayed symbols show a near-uniform lag, after which every
    symbol reaches the sink once directly and once through one path.
    """
    cls = classify(net)
    if not cls.has_direct or cls.backbone is None:
        raise SchedulingError("need parallel paths plus a direct link")
    K = cls.K
    lengths = cls.backbone.lengths
    if base is None:
        if K >= 4:
            base = color_kpp_general(lengths, net)
        elif K == 3:
            base = color_kpp_three(lengths, net)
            if validate_orthogonal(net, base).backflow_nodes:
                raise SchedulingError(
                    "three-path coloring for these lengths cannot avoid "
                    "downstream overlap, so buffered operation is unsafe")
        else:
            raise SchedulingError("need at least three paths for buffering")
    report = validate_orthogonal(net, base)
    if not report.ok or report.rate != 1 or report.backflow_nodes:
        raise SchedulingError("base schedule must be clean and rate 1")

    N = base.cycle_length
    s, d = net.source.id, net.sink.id
    # injection-to-arrival lag of each path under the base coloring
    lags = []
    for path in base.backbone:
        cols = [min(base.slots_of(t, h)) for t, h in _path_edges(path)]
        t = cols[0]
        for a, b in zip(cols, cols[1:]):
            step = (b - a) % N
            t += step if step else N
        lags.append(t - cols[0])
    target = max(lags)
    primes = {}
    lag_of_path = []
    for path, lag in zip(base.backbone, lags):
        b = _ceil_div(target - lag, N)
        primes[path[-2]] = b
        lag_of_path.append(lag + b * N)

    activations = dict(base.activations)
    activations[(s, d)] = frozenset(range(N))
    steady = N * _ceil_div(max(lag_of_path), N)
    return Schedule(
        cycle_length=N,
        activations=activations,
        backbone=base.backbone,
        path_counts=base.path_counts,
        added_delays=dict(base.added_delays),
        steady_state_delay=steady,
        direct_link_mode="buffered",
        buffer_primes=primes,
        symbols_per_cycle=N,
        deliveries=dict(base.deliveries),
        params={"relay_lags": tuple(lag_of_path)},
    )


# ---------------------------------------------------------------------------
# full duplex

def _intermediate_direct_links(net: Network, path):
    pos = {v: i for i, v in enumerate(path)}
    bad = []
    for u, v in net.edge_set:
        if u in pos and v in pos and abs(pos[u] - pos[v]) > 1:
            bad.append((u, v))
    return bad


def _has_cycle(net: Network) -> bool:
    state = {}

    def visit(u):
        state[u] = 1
        for v in net.out_neighbors[u]:
            if state.get(v) == 1:
                return True
            if v not in state and visit(v):
                return True
        state[u] = 2
        return False

    return any(visit(n.id) for n in net.nodes if n.id not in state)


def fd_schedule(net: Network, T=None, rounds=1) -> Schedule:
    """Window-per-path activation for full-duplex networks.

    The maximum family of edge-disjoint paths is activated round-robin,
    each path owning a window of T slots. Edge j of a path switches on
    j-1 slots into the window and off early enough for the pipeline to
    drain, so every window is self-contained and every sink row carries
    exactly one path product. Valid when no chosen path has a link
    between non-consecutive nodes, or when the network is acyclic.
    """
    non_fd = [n.id for n in net.nodes if n.role == "relay" and n.duplex != "full"]
    if non_fd:
        raise SchedulingError(f"relays not full duplex: {non_fd}")
    paths = list(edge_disjoint_paths(net))
    shortcuts = {tuple(p): _intermediate_direct_links(net, p) for p in paths}
    cond1 = not any(v for v in shortcuts.values())
    cond2 = not _has_cycle(net)
    if not (cond1 or cond2):
        worst = {p: v for p, v in shortcuts.items() if v}
        raise SchedulingError(
            f"paths have direct shortcuts {worst} and the network has cycles")

    lengths = [len(p) - 1 for p in paths]
    if T is None:
        T = max(lengths) + 2
    if T < max(lengths):
        raise SchedulingError(f"window {T} shorter than longest path")
    M = len(paths)
    activations = {}
    deliveries = {}
    for rnd in range(rounds):
        for w, (path, n) in enumerate(zip(paths, lengths)):
            base = (rnd * M + w) * T
            for j, (tail, head) in enumerate(_path_edges(path), start=1):
                slots = frozenset(range(base + j - 1, base + T - n + j))
                activations[(tail, head)] = activations.get(
                    (tail, head), frozenset()) | slots
            for t in range(base + n - 1, base + T):
                deliveries[t] = w
    counts = [(T - n + 1) * rounds for n in lengths]
    return Schedule(
        cycle_length=M * T * rounds,
        activations=activations,
        backbone=PathSet(tuple(tuple(p) for p in paths)),
        path_counts=tuple(counts),
        symbols_per_cycle=sum(counts),
        steady_state_delay=0,
        deliveries=deliveries,
        params={"T": T, "rounds": rounds},
    )


# ---------------------------------------------------------------------------
# layered pairing

def layer_partner_map(path_set: PathSet, layer_sizes) -> dict:
    """Pair every forward path with a node-disjoint partner by bumping
    each relay index by one within its layer (the last layer included).
    A bijection without fixed points whenever every layer has >= 2
    nodes."""
    sizes = tuple(layer_sizes)
    tuples = {}
    for p in path_set:
        key = tuple(p[1:-1])
        tuples[key] = p
    partner = {}
    for key, p in tuples.items():
        shifted = []
        for j, v in enumerate(key):
            layer = sorted({q[j + 1] for q in path_set})
            k = layer.index(v)
            shifted.append(layer[(k + 1) % sizes[j]])
        partner[p] = tuples[tuple(shifted)]
    return partner


def layered_matching_schedule(net: Network, T=None) -> Schedule:
    """Pairwise activation of forward paths in a fully connected
    layered network.

    Each forward path gets a block of 2T slots shared with its shifted
    partner; the two run on opposite slot parities, one hop per slot,
    with onsets staggered so stale relay state is never transmitted.
    Every path delivers 2T - L symbols per full cycle.
    """
    cls = classify(net)
    if cls.tag == "regular":
        sizes = tuple(len(layer) for layer in cls.layers[1:-1])
        fully = all(
            net.has_edge(u, v)
            for a, b in zip(cls.layers, cls.layers[1:]) for u in a for v in b)
        if not fully:
            raise SchedulingError("network is not fully connected")
    elif cls.tag == "fully-connected-layered":
        sizes = tuple(len(layer) for layer in cls.layers[1:-1])
    else:
        raise SchedulingError(f"network is {cls.label}, need fully connected layers")
    L = len(sizes)
    pset = forward_paths(net)
    partner = layer_partner_map(pset, sizes)
    if T is None:
        T = L + 2
    if 2 * T <= L:
        raise SchedulingError("blocks too short for the pipeline")

    activations = {}
    deliveries = {}
    paths = list(pset)
    index = {p: i for i, p in enumerate(paths)}
    for b, p in enumerate(paths):
        base = b * 2 * T
        for role, path in enumerate((p, partner[p])):
            for j, (tail, head) in enumerate(_path_edges(path), start=1):
                lo, hi = role + j - 1, 2 * T - 1 - (L + 1) + j
                slots = {base + t for t in range(lo, hi + 1)
                         if t % 2 == (role + j - 1) % 2}
                activations[(tail, head)] = activations.get(
                    (tail, head), frozenset()) | frozenset(slots)
            n = L + 1
            for t in range(role + n - 1, 2 * T):
                if t % 2 == (role + n - 1) % 2 and t - (n - 1) <= 2 * T - 1 - L:
                    deliveries[base + t] = index[path]
    m = 2 * T - L
    return Schedule(
        cycle_length=2 * T * len(paths),
        activations=activations,
        backbone=pset,
        path_counts=(m,) * len(paths),
        symbols_per_cycle=m * len(paths),
        steady_state_delay=0,
        deliveries=deliveries,
        params={"T": T, "partner": {" ".join(k): " ".join(v)
                                    for k, v in partner.items()}},
    )


# ---------------------------------------------------------------------------
# reference two-hop schedules

def single_link_schedule(net: Network) -> Schedule:
    s, d = net.source.id, net.sink.id
    return Schedule(
        cycle_length=1,
        activations={(s, d): frozenset({0})},
        backbone=PathSet(((s, d),)),
        path_counts=(1,),
        symbols_per_cycle=1,
        deliveries={0: 0},
    )


def naf_schedule(net: Network) -> Schedule:
    """Two-slot relay pattern: the relay listens in the first slot and
    repeats in the second while the source keeps talking on the direct
    link."""
    s, d = net.source.id, net.sink.id
    relays = [n.id for n in net.relays]
    if len(relays) != 1 or not net.has_edge(s, d):
        raise SchedulingError("need one relay and a direct link")
    r = relays[0]
    return Schedule(
        cycle_length=2,
        activations={
            (s, d): frozenset({0, 1}),
            (s, r): frozenset({0}),
            (r, d): frozenset({1}),
        },
        backbone=PathSet(((s, r, d),)),
        path_counts=(1,),
        symbols_per_cycle=2,
        deliveries={1: 0},
        params={"direct_every_slot": 1},
    )


def saf_schedule(net: Network, n_slots=5) -> Schedule:
    """Slotted relaying: isolated relays take turns repeating the
    previous slot's broadcast while the source sends a fresh symbol
    every slot; the final slot of each frame goes unrelayed."""
    s, d = net.source.id, net.sink.id
    relays = sorted(n.id for n in net.relays)
    if not relays or not net.has_edge(s, d):
        raise SchedulingError("need relays and a direct link")
    M, R = n_slots, len(relays)
    if M < 2:
        raise SchedulingError("need at least two slots")
    activations = {(s, d): frozenset(range(M))}
    counts = []
    deliveries = {}
    for k, r in enumerate(relays):
        listen = frozenset(t for t in range(M - 1) if t % R == k)
        activations[(s, r)] = listen
        activations[(r, d)] = frozenset(t + 1 for t in listen)
        counts.append(len(listen))
        for t in listen:
            deliveries[t + 1] = k
    return Schedule(
        cycle_length=M,
        activations=activations,
        backbone=PathSet(tuple((s, r, d) for r in relays)),
        path_counts=tuple(counts),
        symbols_per_cycle=M,
        deliveries=deliveries,
        params={"direct_every_slot": 1},
    )


def auto_schedule(net: Network) -> Schedule:
    """Canonical schedule for whatever family the network falls in.

    Dispatch follows classify: regular and parallel-path networks get
    the matching coloring, inter-path links go through the segmented
    interference construction, a direct link switches on buffered
    operation on top of the backbone schedule, and layered networks use
    the partner matching. Relay banks with a direct link fall back to
    the two-hop reference patterns.
    """
    if not net.relays:
        return single_link_schedule(net)
    cls = classify(net)
    if cls.tag == "regular":
        return color_regular(cls.K, cls.L, net)
    if cls.tag in ("KPP", "KPP(I)", "KPP(D)", "KPP(I,D)"):
        if cls.has_direct:
            base = kppI_schedule(net) if cls.has_interference else None
            try:
                return kppD_schedule(net, base)
            except SchedulingError:
                if is_relay_bank(net):
                    return saf_schedule(net)
                raise
        if cls.has_interference:
            return kppI_schedule(net)
        lengths = cls.backbone.lengths
        if cls.K == 2:
            return color_kpp_two(lengths[0], lengths[1], net)
        if cls.K == 3:
            return color_kpp_three(lengths, net)
        return color_kpp_general(lengths, net)
    if cls.tag in ("layered", "fully-connected-layered"):
        return layered_matching_schedule(net)
    if is_relay_bank(net):
        if len(net.relays) == 1:
            return naf_schedule(net)
        return saf_schedule(net)
    raise SchedulingError(
        f"no schedule construction covers this network (classified {cls.tag})")


# ---------------------------------------------------------------------------
# file format

def _jsonable(value):
    """Parameter values as JSON-stable types; sequences become lists.
    Anything exotic is dropped rather than half-serialized."""
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        items = [_jsonable(v) for v in value]
        return None if any(v is None for v in items) else items
    if isinstance(value, dict):
        out = {str(k): _jsonable(v) for k, v in value.items()}
        return None if any(v is None for v in out.values()) else out
    return None


def _from_json(value):
    # tuples went to disk as lists; schedule params use tuples
    if isinstance(value, list):
        return tuple(_from_json(v) for v in value)
    if isinstance(value, dict):
        return {k: _from_json(v) for k, v in value.items()}
    return value


def schedule_to_dict(sched: Schedule) -> dict:
    return {
        "cycle_length": sched.cycle_length,
        "activations": [
            {"tail": t, "head": h, "slots": sorted(slots)}
            for (t, h), slots in sorted(sched.activations.items())
        ],
        "backbone": [list(p) for p in sched.backbone] if sched.backbone else None,
        "path_counts": list(sched.path_counts),
        "added_delays": dict(sched.added_delays),
        "steady_state_delay": sched.steady_state_delay,
        "direct_link_mode": sched.direct_link_mode,
        "buffer_primes": dict(sched.buffer_primes),
        "symbols_per_cycle": sched.symbols_per_cycle,
        "deliveries": {str(k): v for k, v in sched.deliveries.items()},
        "params": {k: j for k, v in sched.params.items()
                   if (j := _jsonable(v)) is not None},
    }


def schedule_from_dict(data: dict) -> Schedule:
    try:
        return Schedule(
            cycle_length=int(data["cycle_length"]),
            activations={
                (item["tail"], item["head"]): frozenset(int(s) for s in item["slots"])
                for item in data["activations"]
            },
            backbone=PathSet(tuple(tuple(p) for p in data["backbone"]))
            if data.get("backbone") else None,
            path_counts=tuple(data.get("path_counts", ())),
            added_delays={str(k): int(v)
                          for k, v in data.get("added_delays", {}).items()},
            steady_state_delay=int(data.get("steady_state_delay", 0)),
            direct_link_mode=data.get("direct_link_mode", "none"),
            buffer_primes={str(k): int(v)
                           for k, v in data.get("buffer_primes", {}).items()},
            symbols_per_cycle=int(data.get("symbols_per_cycle", 0)),
            deliveries={int(k): int(v)
                        for k, v in data.get("deliveries", {}).items()},
            params={k: _from_json(v)
                    for k, v in data.get("params", {}).items()},
        )
    except (KeyError, TypeError) as exc:
        raise SchedulingError(f"malformed schedule description: {exc}") from exc


def save_schedule(sched: Schedule, path) -> None:
    with open(path, "w") as fh:
        json.dump(schedule_to_dict(sched), fh, indent=2)
        fh.write("\n")


def load_schedule(path) -> Schedule:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchedulingError(f"not valid JSON: {exc}") from exc
    return schedule_from_dict(data)
