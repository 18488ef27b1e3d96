import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enctrust import protocol, she
from enctrust.circuits import EvalStats, build_ripple_adder, star_eval
from enctrust.protocol import (
    Drop,
    ForwardUnchanged,
    ForwardUpdated,
    Reply,
    destination_reply,
    make_node,
    process_rr,
    rp_from_json,
    rp_to_json,
    rr_from_json,
    rr_to_json,
    select_next_hop,
    source_finalize,
    source_initiate,
)
from enctrust.she import SecurityParams, decrypt_value


def params_for(eta=200, lam=3):
    return SecurityParams.from_lambda(lam, eta=eta)


def test_node_validation():
    with pytest.raises(ValueError):
        make_node(1, {1, 2}, {2: 5})
    with pytest.raises(ValueError):
        make_node(1, {2}, {3: 5})
    with pytest.raises(ValueError):
        make_node(1, {2}, {2: 11})
    with pytest.raises(ValueError):
        make_node(1, {2}, {2: 0})
    with pytest.raises(ValueError):
        protocol.NodeState(
            id=1, neighbors=frozenset({2}), trust_db={2: 5}, width=4,
            circuit=build_ripple_adder(3),
        )


def test_select_next_hop_argmax_and_ties():
    node = make_node(0, {1, 2, 3, 4}, {1: 7, 2: 9, 3: 9, 4: 2})
    assert select_next_hop(node, set()) == 2  # tie between 2 and 3 at 9
    assert select_next_hop(node, {2}) == 3
    assert select_next_hop(node, {2, 3}) == 1
    assert select_next_hop(node, {1, 2, 3, 4}) is None


@settings(max_examples=60)
@given(st.dictionaries(st.integers(1, 30), st.integers(1, 10), min_size=1, max_size=12),
       st.sets(st.integers(1, 30), max_size=10))
def test_select_next_hop_matches_brute_force(trust_db, exclude):
    node = make_node(0, set(trust_db), trust_db)
    got = select_next_hop(node, exclude)
    candidates = [(t, nb) for nb, t in trust_db.items() if nb not in exclude]
    if not candidates:
        assert got is None
    else:
        best = max(t for t, _ in candidates)
        assert got == min(nb for t, nb in candidates if t == best)


def test_source_initiate_builds_first_rr():
    params = params_for()
    rng = random.Random(0)
    node = make_node(5, {6, 7}, {6: 3, 7: 9})
    keys, rr = source_initiate(node, 99, params, rng)
    assert rr.source == 5
    assert rr.destination == 99
    assert rr.next_hop == 7
    assert rr.path == (5,)
    assert decrypt_value(keys.sk, rr.acc_trust) == 9
    assert rr.stats_so_far == EvalStats()
    recovered = [star_eval(a, b, f, keys.pk, params) for a, b, f in rr.payload.triples]
    assert decrypt_value(keys.sk, recovered) == 9


def test_source_initiate_errors():
    params = params_for()
    rng = random.Random(0)
    node = make_node(5, {6}, {6: 3})
    with pytest.raises(ValueError):
        source_initiate(node, 5, params, rng)
    lonely = make_node(5, set(), {})
    with pytest.raises(ValueError):
        source_initiate(lonely, 9, params, rng)


def chain_fixture(trusts, width=4, eta=200, seed=1):
    """Nodes 0-1-2-...-k in a line; trusts[i] is node i's trust toward i+1."""
    params = params_for(eta=eta)
    rng = random.Random(seed)
    n = len(trusts) + 1
    nodes = {}
    for i in range(n):
        nb = set()
        tdb = {}
        if i > 0:
            nb.add(i - 1)
            tdb[i - 1] = 1
        if i < n - 1:
            nb.add(i + 1)
            tdb[i + 1] = trusts[i]
        nodes[i] = make_node(i, nb, tdb, width)
    return params, rng, nodes


def test_delivery_at_destination_returns_reply():
    params, rng, nodes = chain_fixture([7, 5])
    keys, rr = source_initiate(nodes[0], 2, params, rng)
    decision = process_rr(nodes[2], rr, rng)
    assert isinstance(decision, Reply)
    assert decision.reply.path == (0, 2)
    assert decrypt_value(keys.sk, decision.reply.acc_trust) == 7


def test_misdelivered_rr_is_dropped():
    params, rng, nodes = chain_fixture([7, 5, 4])
    keys, rr = source_initiate(nodes[0], 3, params, rng)
    assert rr.next_hop == 1
    decision = process_rr(nodes[2], rr, rng)
    assert isinstance(decision, Drop)
    assert "misdelivered" in decision.reason


def test_revisit_is_dropped():
    import dataclasses

    params, rng, nodes = chain_fixture([7, 5, 4])
    keys, rr = source_initiate(nodes[0], 3, params, rng)
    # A request re-addressed to its own source: the source is on the path.
    looped = dataclasses.replace(rr, next_hop=0)
    decision = process_rr(nodes[0], looped, rng)
    assert isinstance(decision, Drop)
    assert "revisit" in decision.reason


def test_shortcut_forwards_unchanged():
    params, rng, nodes = chain_fixture([7, 5])
    keys, rr = source_initiate(nodes[0], 2, params, rng)
    decision = process_rr(nodes[1], rr, rng)
    assert isinstance(decision, ForwardUnchanged)
    assert decision.next_hop == 2
    # the forwarder contributed nothing: accumulator still decrypts to 7
    assert decrypt_value(keys.sk, rr.acc_trust) == 7


def test_update_accumulates_and_appends_path():
    params, rng, nodes = chain_fixture([7, 5, 4, 6])
    keys, rr = source_initiate(nodes[0], 4, params, rng)
    decision = process_rr(nodes[1], rr, rng)
    assert isinstance(decision, ForwardUpdated)
    rr2 = decision.rr
    assert rr2.path == (0, 1)
    assert rr2.next_hop == 2
    assert decrypt_value(keys.sk, rr2.acc_trust) == 7 + 5
    assert (decision.node_stats.n_he_add, decision.node_stats.n_he_mul) == (10, 7)
    assert rr2.stats_so_far == decision.node_stats


def test_update_star_mode_matches_plain():
    params, rng, nodes = chain_fixture([7, 5, 4, 6], eta=300)
    keys, rr = source_initiate(nodes[0], 4, params, rng)
    decision = process_rr(nodes[1], rr, rng, star_mode=True)
    assert isinstance(decision, ForwardUpdated)
    assert decrypt_value(keys.sk, decision.rr.acc_trust) == 12
    # 4 recovery triples + 17 adder gates, each universal gate is 2 muls 3 adds
    assert (decision.node_stats.n_he_mul, decision.node_stats.n_he_add) == (42, 63)


def test_no_candidates_drops():
    params = params_for()
    rng = random.Random(3)
    # node 1's only neighbors are the source and an already-visited node
    nodes = {
        0: make_node(0, {1}, {1: 5}),
        1: make_node(1, {0, 2}, {0: 4, 2: 6}),
    }
    keys, rr = source_initiate(nodes[0], 9, params, rng)
    import dataclasses

    rr = dataclasses.replace(rr, path=(0, 2), next_hop=1)
    decision = process_rr(nodes[1], rr, rng)
    assert isinstance(decision, Drop)
    assert "no trusted next hop" in decision.reason


def test_malformed_payload_drops():
    params, rng, nodes = chain_fixture([7, 5, 4])
    keys, rr = source_initiate(nodes[0], 3, params, rng)
    import dataclasses

    bad = dataclasses.replace(rr, acc_trust=rr.acc_trust[:2])
    decision = process_rr(nodes[1], bad, rng)
    assert isinstance(decision, Drop)
    assert "malformed payload" in decision.reason


def test_full_two_update_chain_with_wraparound():
    # 0 -> 1 -> 2 -> 3 -> 4: nodes 1 and 2 update, node 3 shortcuts.
    trusts = [9, 8, 7, 1]
    params, rng, nodes = chain_fixture(trusts)
    keys, rr = source_initiate(nodes[0], 4, params, rng)
    hops = 0
    while True:
        decision = process_rr(nodes[rr.next_hop], rr, rng)
        if isinstance(decision, ForwardUpdated):
            rr = decision.rr
        elif isinstance(decision, ForwardUnchanged):
            import dataclasses

            rr = dataclasses.replace(rr, next_hop=decision.next_hop)
        elif isinstance(decision, Reply):
            rp = decision.reply
            break
        hops += 1
        assert hops < 10
    outcome = source_finalize(keys, rp, params)
    assert outcome.path == (0, 1, 2, 4)
    assert outcome.trust == (9 + 8 + 7) % 16
    assert outcome.trusted


def test_intermediates_and_destination_never_decrypt(monkeypatch):
    import dataclasses

    params, rng, nodes = chain_fixture([7, 5, 4])
    keys, rr = source_initiate(nodes[0], 3, params, rng)

    def forbidden(*args, **kwargs):
        raise AssertionError("decrypt_bit called outside source_finalize")

    monkeypatch.setattr(she, "decrypt_bit", forbidden)
    decision = process_rr(nodes[1], rr, rng)
    assert isinstance(decision, ForwardUpdated)
    decision = process_rr(nodes[2], decision.rr, rng)
    assert isinstance(decision, ForwardUnchanged)
    rr_at_dest = dataclasses.replace(rr, next_hop=3)
    assert isinstance(process_rr(nodes[3], rr_at_dest, rng), Reply)


def test_finalize_reports_untrusted_on_noise_overflow():
    params, rng, nodes = chain_fixture([7, 5])
    keys, rr = source_initiate(nodes[0], 2, params, rng)
    rp = destination_reply(rr)
    import dataclasses

    noisy = tuple(
        she.Ciphertext(value=ct.value, noise_bits=params.eta + 5) for ct in rp.acc_trust
    )
    rp_bad = dataclasses.replace(rp, acc_trust=noisy)
    outcome = source_finalize(keys, rp_bad, params)
    assert not outcome.trusted


def test_rr_json_roundtrip_and_determinism():
    params, rng, nodes = chain_fixture([7, 5, 4])
    keys, rr = source_initiate(nodes[0], 3, params, rng)
    obj = rr_to_json(rr)
    assert obj["pk"] == format(keys.pk.value, "x")
    assert obj["lambda"] == 3
    assert obj["width"] == 4
    assert obj["path"] == [0]
    assert rr_from_json(obj) == rr

    params2, rng2, nodes2 = chain_fixture([7, 5, 4])
    keys2, rr2 = source_initiate(nodes2[0], 3, params2, rng2)
    assert json.dumps(obj, sort_keys=True) == json.dumps(rr_to_json(rr2), sort_keys=True)


def test_rp_json_roundtrip():
    params, rng, nodes = chain_fixture([7, 5])
    keys, rr = source_initiate(nodes[0], 2, params, rng)
    rp = destination_reply(rr)
    assert rp_from_json(rp_to_json(rp)) == rp


def test_rr_validation():
    params, rng, nodes = chain_fixture([7, 5])
    keys, rr = source_initiate(nodes[0], 2, params, rng)
    import dataclasses

    with pytest.raises(ValueError):
        dataclasses.replace(rr, path=(1, 0))
    with pytest.raises(ValueError):
        dataclasses.replace(rr, path=(0, 1, 1))
    with pytest.raises(ValueError):
        dataclasses.replace(rr, destination=0)
