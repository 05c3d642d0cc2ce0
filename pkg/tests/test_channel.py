"""Induced-channel construction against a scalar reference simulator.

The oracle below replays the slot dynamics with plain dicts: every node
state is a mapping from labels (source symbols, relay noises) to complex
weights, advanced one slot at a time. It shares no code with the batched
propagation engine, so agreement pins down H, sigma and the slot
bookkeeping at machine precision.
"""

import dataclasses

import numpy as np
import pytest

from relaydmt import (
    Edge,
    FadingRealization,
    HalfDuplexError,
    Network,
    Node,
    PropagationError,
    PropagationProgram,
    Schedule,
    color_kpp_general,
    color_kpp_three,
    extract_blocks,
    fd_schedule,
    kppD_schedule,
    kppI_schedule,
    kpp_network,
    layered_matching_schedule,
    layered_network,
    naf_network,
    naf_schedule,
    propagate,
    saf_network,
    saf_schedule,
    single_link_network,
    single_link_schedule,
    structure_certificate,
    two_hop_network,
)
from relaydmt.protocol import PathSet


# ---------------------------------------------------------------------------
# oracle

def trace_reference(net, sched, fading, cycles):
    """Slot-by-slot symbolic replay of the relaying dynamics.

    Rules: a node listens in the slots where a scheduled incoming edge
    is active and then hears every transmitting in-neighbor; listening
    adds one unit of fresh receiver noise; a relay stores the last thing
    it heard (buffered relays keep a queue primed with silence) and
    transmits its pre-slot state. The sink's own noise is not a column,
    it is the identity part of sigma.

    Returns (h, sigma, input_slots, output_slots).
    """
    N = sched.cycle_length
    total = sched.steady_state_delay + cycles * N
    sid, did = net.source.id, net.sink.id
    tx, rx = {}, {}
    for (a, b), slots in sched.activations.items():
        tx.setdefault(a, set()).update(slots)
        rx.setdefault(b, set()).update(slots)

    state = {}
    queues = {u: [None] * p for u, p in sched.buffer_primes.items()}
    rows, row_slots, sym_slots = [], [], []
    n_sym = 0
    for t in range(total):
        s = t % N
        talkers = {u for u, st in tx.items() if s in st}
        outgoing = {}
        for w in talkers:
            if w == sid:
                outgoing[w] = {("x", n_sym): 1.0 + 0.0j}
            elif w in queues:
                q = queues[w]
                outgoing[w] = q.pop(0) if q else None
            else:
                outgoing[w] = state.get(w)
        if sid in talkers:
            sym_slots.append(t)
            n_sym += 1
        updates = {}
        for u, st in rx.items():
            if s not in st:
                continue
            heard = {}
            for w in net.in_neighbors[u]:
                if w in talkers and outgoing[w] is not None:
                    g = fading.gains[(w, u)]
                    for lbl, c in outgoing[w].items():
                        heard[lbl] = heard.get(lbl, 0.0) + g * c
            if u == did:
                rows.append(heard)
                row_slots.append(t)
            else:
                heard[("n", u, t)] = 1.0 + 0.0j
                updates[u] = heard
        for u, vec in updates.items():
            if u in queues:
                queues[u].append(vec)
            else:
                state[u] = vec

    keep = [i for i, t in enumerate(row_slots) if t >= sched.steady_state_delay]
    kept = [rows[i] for i in keep]
    out_slots = tuple(row_slots[i] for i in keep)
    syms = [j for j in range(n_sym)
            if any(("x", j) in r and abs(r[("x", j)]) > 0 for r in kept)]
    h = np.array([[r.get(("x", j), 0.0) for j in syms] for r in kept],
                 dtype=complex).reshape(len(kept), len(syms))
    noise_labels = sorted({l for r in kept for l in r if l[0] == "n"},
                          key=lambda l: (l[2], l[1]))
    g = np.array([[r.get(l, 0.0) for l in noise_labels] for r in kept],
                 dtype=complex).reshape(len(kept), len(noise_labels))
    sigma = np.eye(len(kept)) + g @ g.conj().T
    return h, sigma, tuple(sym_slots[j] for j in syms), out_slots


def fd_chain(n_relays):
    ids = [f"r{i + 1}" for i in range(n_relays)]
    nodes = [Node("s", "source"), Node("d", "sink")]
    nodes[1:1] = [Node(r, "relay", 1, "full") for r in ids]
    chain = ["s"] + ids + ["d"]
    return Network(nodes, [Edge(t, h) for t, h in zip(chain, chain[1:])])


ZOO = [
    ("single", lambda: single_link_network(), single_link_schedule, 3),
    ("two-slot relay", naf_network, naf_schedule, 2),
    ("slotted bank 2", lambda: saf_network(2), saf_schedule, 2),
    ("slotted bank 3", lambda: saf_network(3), saf_schedule, 2),
    ("three paths", lambda: kpp_network((2, 2, 2)),
     lambda n: color_kpp_three((2, 2, 2), n), 2),
    ("uneven paths", lambda: kpp_network((2, 3, 4)),
     lambda n: color_kpp_three((2, 3, 4), n), 2),
    ("four paths", lambda: kpp_network((2, 3, 2, 4)),
     lambda n: color_kpp_general((2, 3, 2, 4), n), 2),
    ("crossed paths", lambda: kpp_network((2, 2, 4), cross_links=(((3, 1), (1, 1)),)),
     kppI_schedule, 2),
    ("buffered direct", lambda: kpp_network((2, 3, 4), direct_link=True),
     kppD_schedule, 3),
    ("layered", lambda: layered_network((1, 2, 2, 1)),
     layered_matching_schedule, 2),
    ("full-duplex line", lambda: fd_chain(2), fd_schedule, 2),
]


@pytest.mark.parametrize("label,mknet,mksched,cycles",
                         ZOO, ids=[z[0] for z in ZOO])
def test_propagation_matches_reference(label, mknet, mksched, cycles):
    net = mknet()
    sched = mksched(net)
    for seed in (1, 2):
        fading = FadingRealization.sample(net, seed)
        model = propagate(net, sched, fading, cycles=cycles)
        h, sigma, in_slots, out_slots = trace_reference(net, sched, fading, cycles)
        assert model.input_slots == in_slots
        assert model.output_slots == out_slots
        np.testing.assert_allclose(model.h, h, rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(model.sigma, sigma, rtol=1e-12, atol=1e-13)


def test_two_slot_relay_closed_form():
    # one cycle: rows [g x0; b(a x0 + w) + g x1], so H is [[g,0],[ab,g]]
    # and sigma gains 1+|b|^2 on the second diagonal entry
    net = naf_network()
    fading = FadingRealization.sample(net, 7)
    a = fading.gains[("s", "r1")]
    b = fading.gains[("r1", "d")]
    g = fading.gains[("s", "d")]
    model = propagate(net, naf_schedule(net), fading, cycles=1)
    np.testing.assert_allclose(model.h, [[g, 0.0], [a * b, g]], rtol=1e-12)
    np.testing.assert_allclose(model.sigma,
                               [[1.0, 0.0], [0.0, 1.0 + abs(b) ** 2]],
                               rtol=1e-12)
    assert model.total_slots == 2
    assert model.input_slots == (0, 1)


def test_slotted_bank_closed_form():
    net = saf_network(2)
    fading = FadingRealization.sample(net, 11)
    g = fading.gains[("s", "d")]
    p = [fading.gains[("s", f"r{k}")] * fading.gains[(f"r{k}", "d")]
         for k in (1, 2)]
    amp = [abs(fading.gains[(f"r{k}", "d")]) ** 2 for k in (1, 2)]
    model = propagate(net, saf_schedule(net), fading, cycles=1)
    want = np.diag([g] * 5) + np.diag([p[0], p[1], p[0], p[1]], k=-1)
    np.testing.assert_allclose(model.h, want, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(
        model.sigma,
        np.diag([1.0, 1 + amp[0], 1 + amp[1], 1 + amp[0], 1 + amp[1]]),
        rtol=1e-12, atol=1e-13)


def test_batched_run_matches_single_draws():
    net = kpp_network((2, 2, 2))
    sched = color_kpp_three((2, 2, 2), net)
    prog = PropagationProgram(net, sched, cycles=2)
    fadings = [FadingRealization.sample(net, s) for s in range(3)]
    gains = np.concatenate([prog.gain_vector(f) for f in fadings], axis=1)
    h, g = prog.run(gains)
    for k, f in enumerate(fadings):
        model = propagate(net, sched, f, cycles=2)
        np.testing.assert_allclose(h[k], model.h, rtol=1e-12)
        np.testing.assert_allclose(np.eye(h[k].shape[0]) + g[k] @ g[k].conj().T,
                                   model.sigma, rtol=1e-12)


@pytest.mark.parametrize("label,mknet,mksched,cycles",
                         ZOO, ids=[z[0] for z in ZOO])
def test_noise_covariance_dominates_identity(label, mknet, mksched, cycles):
    net = mknet()
    model = propagate(net, mksched(net), FadingRealization.sample(net, 3),
                      cycles=cycles)
    eig = np.linalg.eigvalsh(model.sigma)
    assert eig.min() >= 1.0 - 1e-9


# ---------------------------------------------------------------------------
# structure certificates

def test_certificates_across_zoo():
    cases = [
        (naf_network(), naf_schedule, "lower-triangular"),
        (saf_network(2), saf_schedule, "lower-triangular"),
        (kpp_network((2, 2, 2)), lambda n: color_kpp_three((2, 2, 2), n),
         "diagonal"),
        (kpp_network((2, 3, 4), direct_link=True), kppD_schedule,
         "lower-triangular"),
        (fd_chain(2), fd_schedule, "diagonal"),
    ]
    for net, mksched, kind in cases:
        sched = mksched(net)
        model = propagate(net, sched, FadingRealization.sample(net, 5))
        cert = structure_certificate(model)
        assert cert.kind == kind, (net.name or kind, cert)
        assert cert.thread_ok, (kind, cert.max_thread_error)
        assert cert.max_thread_error < 1e-9


def test_certificate_thread_values_match_path_products():
    # unequal lengths interleave arrivals across cycle boundaries, so the
    # channel is a permuted diagonal: still one symbol per row, each
    # carrying the whole gain product of its delivering path
    net = kpp_network((2, 3, 4))
    sched = color_kpp_three((2, 3, 4), net)
    fading = FadingRealization.sample(net, 9)
    model = propagate(net, sched, fading)
    cert = structure_certificate(model)
    assert cert.kind == "block-lower-triangular"
    assert cert.thread_ok
    products = []
    for path in sched.backbone:
        prod = 1.0
        for pair in zip(path, path[1:]):
            prod *= fading.gains[pair]
        products.append(prod)
    scale = np.abs(model.h).max()
    for r, slot in enumerate(model.output_slots):
        nz = np.flatnonzero(np.abs(model.h[r]) > 1e-12 * scale)
        assert len(nz) == 1
        want = products[sched.deliveries[slot % sched.cycle_length]]
        assert abs(model.h[r, nz[0]] - want) <= 1e-12 * abs(want)


def test_certificate_synthetic_kinds():
    base = propagate(naf_network(), naf_schedule(naf_network()),
                     FadingRealization.sample(naf_network(), 1), cycles=2)

    def with_h(h):
        return dataclasses.replace(base, h=np.array(h, dtype=complex))

    # oldest column advances while the newest stalls
    up = structure_certificate(with_h(
        [[1, 0, 0, 1], [0, 1, 0, 1], [0, 0, 1, 1], [0, 0, 0, 1]]))
    assert up.kind == "upper-triangular"

    # neither end advances, but nothing reaches into a later cycle
    blk = structure_certificate(with_h(
        [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]]))
    assert blk.kind == "block-lower-triangular"

    # a first-cycle row fed by a second-cycle symbol fits no shape
    none = structure_certificate(with_h(
        [[1, 0, 1, 0], [1, 1, 0, 1], [0, 1, 1, 0], [0, 1, 0, 1]]))
    assert none.kind == "none"

    empty = structure_certificate(with_h(np.zeros((4, 4))))
    assert empty.kind == "none"


def test_extract_blocks_split_and_independence():
    for mknet, mksched in [(naf_network, naf_schedule),
                           (lambda: saf_network(2), saf_schedule)]:
        net = mknet()
        model = propagate(net, mksched(net), FadingRealization.sample(net, 4))
        h_diag, h_rest, independent = extract_blocks(model)
        np.testing.assert_allclose(h_diag + h_rest, model.h, rtol=1e-15)
        assert all((np.abs(r) > 0).sum() == 1 for r in h_diag)
        assert independent

    net = kpp_network((2, 2, 2))
    model = propagate(net, color_kpp_three((2, 2, 2), net),
                      FadingRealization.sample(net, 4))
    _, h_rest, independent = extract_blocks(model)
    assert np.abs(h_rest).max() == 0.0
    assert independent


def test_extract_blocks_needs_structure():
    base = propagate(naf_network(), naf_schedule(naf_network()),
                     FadingRealization.sample(naf_network(), 1), cycles=2)
    shuffled = dataclasses.replace(base, h=np.array(
        [[1, 0, 1, 0], [1, 1, 0, 1], [0, 1, 1, 0], [0, 1, 0, 1]],
        dtype=complex))
    with pytest.raises(PropagationError):
        extract_blocks(shuffled)


# ---------------------------------------------------------------------------
# scheduling faults the engine must reject

def test_half_duplex_clash_rejected():
    net = naf_network()
    sched = Schedule(
        cycle_length=1,
        activations={("s", "r1"): frozenset({0}), ("r1", "d"): frozenset({0})},
        backbone=PathSet((("s", "r1", "d"),)),
        symbols_per_cycle=1,
    )
    with pytest.raises(HalfDuplexError):
        propagate(net, sched, FadingRealization.sample(net, 0))


def test_full_duplex_node_may_clash():
    net = fd_chain(1)
    sched = Schedule(
        cycle_length=1,
        activations={("s", "r1"): frozenset({0}), ("r1", "d"): frozenset({0})},
        backbone=PathSet((("s", "r1", "d"),)),
        symbols_per_cycle=1,
        steady_state_delay=1,
    )
    fading = FadingRealization.sample(net, 0)
    model = propagate(net, sched, fading, cycles=3)
    # unit relay delay: row t carries the symbol minted at t-1
    h, sigma, in_slots, out_slots = trace_reference(net, sched, fading, 3)
    np.testing.assert_allclose(model.h, h, rtol=1e-12)
    np.testing.assert_allclose(model.sigma, sigma, rtol=1e-12)
    prod = fading.gains[("s", "r1")] * fading.gains[("r1", "d")]
    np.testing.assert_allclose(np.diag(model.h, k=0),
                               [prod] * model.n_rows, rtol=1e-12)


def test_missing_edge_and_listening_source_rejected():
    net = naf_network()
    bad_edge = Schedule(cycle_length=1,
                        activations={("r1", "s"): frozenset({0})})
    with pytest.raises(PropagationError):
        PropagationProgram(net, bad_edge, 1)

    bidi = kpp_network((2, 2))
    to_source = Schedule(cycle_length=1,
                         activations={("p1r1", "s"): frozenset({0})})
    with pytest.raises(PropagationError, match="source"):
        PropagationProgram(bidi, to_source, 1)

    with pytest.raises(PropagationError):
        PropagationProgram(net, naf_schedule(net), 0)


# ---------------------------------------------------------------------------
# back-flow: reverse links must be invisible under clean colorings

def _forward_twin(lengths, **kw):
    return (kpp_network(lengths, bidirectional=True, **kw),
            kpp_network(lengths, bidirectional=False, **kw))


def test_clean_colorings_never_use_reverse_links():
    for lengths, mksched in [
        ((2, 2, 2), lambda n: color_kpp_three((2, 2, 2), n)),
        ((2, 3, 4), lambda n: color_kpp_three((2, 3, 4), n)),
        ((2, 3, 2, 4), lambda n: color_kpp_general((2, 3, 2, 4), n)),
    ]:
        bidi, fwd = _forward_twin(lengths)
        sched = mksched(bidi)
        fading = FadingRealization.sample(bidi, 13)
        a = propagate(bidi, sched, fading, cycles=2)
        b = propagate(fwd, sched, fading, cycles=2)
        np.testing.assert_allclose(a.h, b.h, rtol=1e-12)
        np.testing.assert_allclose(a.sigma, b.sigma, rtol=1e-12)


def test_overlapping_colors_do_leak_through_reverse_links():
    # first and third edge of the long path share a slot, so its first
    # relay listens while the second one talks; the reverse link then
    # carries real energy and the forward-only twin disagrees
    bidi, fwd = _forward_twin((3, 2))
    sched = Schedule(
        cycle_length=2,
        activations={("s", "p1r1"): frozenset({0}),
                     ("p1r1", "p1r2"): frozenset({1}),
                     ("p1r2", "d"): frozenset({0})},
        backbone=PathSet((("s", "p1r1", "p1r2", "d"),)),
        symbols_per_cycle=1,
        deliveries={0: 0},
        steady_state_delay=2,
    )
    fading = FadingRealization.sample(bidi, 13)
    a = propagate(bidi, sched, fading, cycles=3)
    b = propagate(fwd, sched, fading, cycles=3)
    assert a.h.shape == b.h.shape
    assert not np.allclose(a.h, b.h)
    assert not np.allclose(a.sigma, b.sigma)


# ---------------------------------------------------------------------------
# fading bookkeeping

def test_fading_reciprocal_and_perturbed():
    net = kpp_network((2, 2))
    rec = FadingRealization.sample(net, 21, reciprocal=True)
    assert rec.gains[("s", "p1r1")] == rec.gains[("p1r1", "s")]
    plain = FadingRealization.sample(net, 21)
    pairs = [p for p in plain.gains if (p[1], p[0]) in plain.gains]
    assert any(plain.gains[p] != plain.gains[(p[1], p[0])] for p in pairs)

    bumped = plain.perturbed(("s", "p1r1"), factor=2.0)
    assert bumped.gains[("s", "p1r1")] == 2.0 * plain.gains[("s", "p1r1")]
    untouched = [p for p in plain.gains if p != ("s", "p1r1")]
    assert all(bumped.gains[p] == plain.gains[p] for p in untouched)
