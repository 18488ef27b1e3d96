import json
import random

import pytest

from enctrust.sim import (
    DELIVERED,
    DROPPED,
    TOO_DEEP,
    NoiseAudit,
    NoiseBudgetError,
    RunConfig,
    Topology,
    benchmark,
    benchmark_to_json,
    build_nodes,
    chain_topology,
    format_benchmark_table,
    generate_topology,
    load_topology,
    measure_mul_throughput,
    plaintext_oracle,
    required_eta,
    run_discovery,
    save_topology,
)


def triangle_with_pendant():
    # 0-1-2 triangle, destination 3 hangs off node 0 with the lowest trust,
    # so the greedy walk wanders into the triangle and dead-ends at node 2.
    return Topology(
        nodes=(0, 1, 2, 3),
        edges=((0, 1), (0, 2), (0, 3), (1, 2)),
        trust={
            (0, 1): 9, (1, 0): 5,
            (0, 2): 4, (2, 0): 3,
            (0, 3): 1, (3, 0): 2,
            (1, 2): 8, (2, 1): 6,
        },
    )


def test_topology_validation_messages():
    with pytest.raises(ValueError, match="no nodes"):
        Topology(nodes=(), edges=(), trust={})
    with pytest.raises(ValueError, match="duplicate node"):
        Topology(nodes=(1, 1), edges=(), trust={})
    with pytest.raises(ValueError, match="self-loop"):
        Topology(nodes=(1, 2), edges=((1, 1),), trust={})
    with pytest.raises(ValueError, match="unknown node"):
        Topology(nodes=(1, 2), edges=((1, 3),), trust={})
    with pytest.raises(ValueError, match="not normalized"):
        Topology(nodes=(1, 2), edges=((2, 1),), trust={(1, 2): 5, (2, 1): 5})
    with pytest.raises(ValueError, match="missing trust"):
        Topology(nodes=(1, 2), edges=((1, 2),), trust={(1, 2): 5})
    with pytest.raises(ValueError, match="non-edges"):
        Topology(
            nodes=(1, 2, 3),
            edges=((1, 2),),
            trust={(1, 2): 5, (2, 1): 5, (1, 3): 2},
        )
    with pytest.raises(ValueError, match=r"trust\['1->2'\] = 11"):
        Topology(nodes=(1, 2), edges=((1, 2),), trust={(1, 2): 11, (2, 1): 5})


def test_topology_json_roundtrip():
    t = triangle_with_pendant()
    obj = t.to_json()
    assert obj["nodes"] == [{"id": 0}, {"id": 1}, {"id": 2}, {"id": 3}]
    assert [0, 1] in obj["edges"]
    assert obj["trust"]["0->1"] == 9
    assert Topology.from_json(obj) == t


def test_topology_file_roundtrip(tmp_path):
    t = generate_topology(8, 3, seed=5)
    path = str(tmp_path / "topo.json")
    save_topology(t, path)
    assert load_topology(path) == t


def test_load_topology_diagnostics(tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{nope")
    with pytest.raises(ValueError, match=r"bad\.json: invalid JSON at line 1"):
        load_topology(str(bad_json))

    missing = tmp_path / "missing.json"
    missing.write_text(json.dumps({"nodes": [{"id": 0}], "edges": []}))
    with pytest.raises(ValueError, match="missing field 'trust'"):
        load_topology(str(missing))

    badkey = tmp_path / "badkey.json"
    badkey.write_text(
        json.dumps({"nodes": [{"id": 0}, {"id": 1}], "edges": [[0, 1]], "trust": {"0-1": 5}})
    )
    with pytest.raises(ValueError, match="'0-1' is not of the form 'a->b'"):
        load_topology(str(badkey))

    badnode = tmp_path / "badnode.json"
    badnode.write_text(json.dumps({"nodes": [{"noid": 0}], "edges": [], "trust": {}}))
    with pytest.raises(ValueError, match=r"nodes\[0\] must be an object with an 'id'"):
        load_topology(str(badnode))

    badedge = tmp_path / "badedge.json"
    badedge.write_text(json.dumps({"nodes": [{"id": 0}], "edges": [[0]], "trust": {}}))
    with pytest.raises(ValueError, match=r"edges\[0\] must be a pair"):
        load_topology(str(badedge))


def test_generate_topology_connected_and_deterministic():
    for seed in range(10):
        t = generate_topology(10, 3, seed=seed)
        assert len(t.nodes) == 10
        adjacency = {i: set(t.neighbors(i)) for i in t.nodes}
        seen = {0}
        stack = [0]
        while stack:
            for nb in adjacency[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        assert seen == set(t.nodes)
    assert generate_topology(10, 3, seed=4) == generate_topology(10, 3, seed=4)
    assert generate_topology(10, 3, seed=4) != generate_topology(10, 3, seed=5)


def test_generate_topology_validation():
    with pytest.raises(ValueError, match="at least 2"):
        generate_topology(1, 1, seed=0)
    with pytest.raises(ValueError, match="impossible"):
        generate_topology(5, 0, seed=0)
    with pytest.raises(ValueError, match="impossible"):
        generate_topology(5, 5, seed=0)
    t = generate_topology(2, 1, seed=0)
    assert t.edges == ((0, 1),)


def test_chain_topology_structure():
    t = chain_topology(6, seed=1)
    assert t.edges == ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5))
    assert all(1 <= v <= 10 for v in t.trust.values())
    assert t.neighbors(0) == frozenset({1})
    assert t.neighbors(3) == frozenset({2, 4})


def test_build_nodes_mirrors_topology():
    t = triangle_with_pendant()
    nodes = build_nodes(t, width=4)
    assert nodes[0].neighbors == frozenset({1, 2, 3})
    assert nodes[0].trust_db == {1: 9, 2: 4, 3: 1}
    assert nodes[2].trust_db == {0: 3, 1: 6}


def test_oracle_shortcut_semantics():
    # 0-1-2 in a line: node 1 sees the destination and forwards unchanged,
    # so only the source's arc is accumulated and node 1 skips the path.
    t = chain_topology(3, seed=3)
    res = plaintext_oracle(t, 0, 2)
    assert res.status == DELIVERED
    assert res.path == (0, 2)
    assert res.trust == t.trust[(0, 1)]


def test_oracle_direct_neighbor():
    t = Topology(
        nodes=(0, 1, 2),
        edges=((0, 1), (0, 2)),
        trust={(0, 1): 3, (1, 0): 3, (0, 2): 9, (2, 0): 9},
    )
    res = plaintext_oracle(t, 0, 2)
    assert res.status == DELIVERED
    assert res.path == (0, 2)
    assert res.trust == 9


def test_oracle_dead_end_drops():
    t = triangle_with_pendant()
    res = plaintext_oracle(t, 0, 3)
    assert res.status == DROPPED
    assert res.path == (0, 1)
    # arcs 0->1 and 1->2 were accumulated before the dead end at node 2
    assert res.trust == (9 + 8) % 16


def test_oracle_wraparound():
    t = chain_topology(6, seed=0)
    res = plaintext_oracle(t, 0, 5, width=4)
    arcs = [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert res.trust == sum(t.trust[a] for a in arcs) % 16


def test_oracle_endpoint_validation():
    t = chain_topology(3, seed=0)
    with pytest.raises(ValueError, match="source 9"):
        plaintext_oracle(t, 9, 2)
    with pytest.raises(ValueError, match="destination 9"):
        plaintext_oracle(t, 0, 9)
    with pytest.raises(ValueError, match="coincide"):
        plaintext_oracle(t, 1, 1)


def test_required_eta_pinned_values():
    assert required_eta(1, 1, 3) == 8
    assert required_eta(4, 0, 3) == 7
    assert required_eta(4, 1, 3) == 27
    assert required_eta(4, 2, 3) == 47
    assert required_eta(4, 1, 3, star_mode=True) == 211
    assert required_eta(4, 2, 3, star_mode=True) == 823
    assert required_eta(4, 50, 3, star_mode=True) == TOO_DEEP


def test_required_eta_monotone_in_hops():
    plain = [required_eta(4, h, 3) for h in range(12)]
    assert plain == sorted(plain)
    star = [required_eta(4, h, 3, star_mode=True) for h in range(6)]
    assert star == sorted(star)


def test_required_eta_validation():
    with pytest.raises(ValueError):
        required_eta(0, 1, 3)
    with pytest.raises(ValueError):
        required_eta(4, -1, 3)
    with pytest.raises(ValueError):
        required_eta(4, 1, 1)


def test_run_discovery_chain_auto_eta():
    t = chain_topology(5, seed=2)
    report = run_discovery(t, 0, 4, RunConfig(lam=3, seed=7))
    oracle = plaintext_oracle(t, 0, 4)
    assert report.status == DELIVERED
    assert report.trusted
    assert report.decrypted_trust == oracle.trust
    assert report.path == oracle.path == (0, 1, 2, 4)
    assert report.eta == required_eta(4, 2, 3)
    assert [n for n, _ in report.per_node_stats] == [1, 2]
    for _, stats in report.per_node_stats:
        assert (stats.n_he_add, stats.n_he_mul) == (10, 7)
    assert (report.stats.n_he_add, report.stats.n_he_mul) == (20, 14)
    assert set(report.wall) == {"keygen", "discovery", "finalize"}


def test_run_discovery_star_mode_matches_oracle():
    t = chain_topology(5, seed=2)
    report = run_discovery(t, 0, 4, RunConfig(lam=3, seed=7, star_mode=True))
    oracle = plaintext_oracle(t, 0, 4)
    assert report.status == DELIVERED
    assert report.trusted
    assert report.decrypted_trust == oracle.trust
    assert report.eta == required_eta(4, 2, 3, star_mode=True)
    assert (report.stats.n_he_add, report.stats.n_he_mul) == (126, 84)


def test_run_discovery_undersized_eta_is_untrusted():
    t = chain_topology(8, seed=3)
    report = run_discovery(t, 0, 7, RunConfig(lam=3, eta=9, seed=1))
    assert report.status == DELIVERED
    assert not report.trusted
    assert report.oracle_trust == plaintext_oracle(t, 0, 7).trust


def test_run_discovery_drop():
    t = triangle_with_pendant()
    report = run_discovery(t, 0, 3, RunConfig(lam=3, seed=4))
    assert report.status == DROPPED
    assert report.decrypted_trust is None
    assert not report.trusted
    assert report.path == (0, 1)
    assert report.dropped_at == 2
    assert "no trusted next hop" in report.drop_reason
    assert report.path == plaintext_oracle(t, 0, 3).path


def test_run_discovery_two_nodes_direct():
    t = chain_topology(2, seed=9)
    report = run_discovery(t, 0, 1, RunConfig(lam=3, seed=5))
    assert report.status == DELIVERED
    assert report.path == (0, 1)
    assert report.decrypted_trust == t.trust[(0, 1)]
    assert report.trusted
    assert report.per_node_stats == ()
    assert report.eta == required_eta(4, 0, 3)


def test_run_discovery_deterministic_modulo_wall_time():
    t = generate_topology(9, 3, seed=11)
    def strip(report):
        obj = report.to_json()
        obj.pop("wall")
        obj["stats"].pop("wall_time")
        for _, st in obj["per_node_stats"]:
            st.pop("wall_time")
        return obj
    a = run_discovery(t, 0, 8, RunConfig(lam=3, seed=13))
    b = run_discovery(t, 0, 8, RunConfig(lam=3, seed=13))
    assert strip(a) == strip(b)


def test_run_discovery_audit_collects_sound_ciphertexts():
    t = chain_topology(5, seed=6)
    audit = NoiseAudit()
    report = run_discovery(t, 0, 4, RunConfig(lam=3, seed=8), audit=audit)
    assert report.status == DELIVERED
    assert audit.keys is not None
    assert len(audit.ciphertexts) > 50
    sk = audit.keys.sk.value
    for ct in audit.ciphertexts:
        assert (ct.value.value % sk).bit_length() <= ct.noise_bits


def test_run_discovery_too_deep_raises():
    t = chain_topology(53, seed=0)
    with pytest.raises(NoiseBudgetError, match="star_mode=True"):
        run_discovery(t, 0, 52, RunConfig(lam=3, star_mode=True))


def test_run_discovery_endpoint_validation():
    t = chain_topology(3, seed=0)
    with pytest.raises(ValueError):
        run_discovery(t, 0, 9, RunConfig(lam=3))


def test_oracle_agreement_on_random_topologies():
    rng = random.Random(0)
    delivered = 0
    for trial in range(15):
        t = generate_topology(rng.randint(4, 8), 2.5, seed=trial)
        nodes = sorted(t.nodes)
        source, dest = rng.sample(nodes, 2)
        report = run_discovery(t, source, dest, RunConfig(lam=3, seed=trial))
        oracle = plaintext_oracle(t, source, dest)
        assert report.status == oracle.status
        assert report.path == oracle.path
        if report.status == DELIVERED:
            delivered += 1
            assert report.trusted
            assert report.decrypted_trust == oracle.trust
    assert delivered > 0


def test_benchmark_counts_and_shape():
    rows = benchmark(seed=0, lambdas=(3,), n=20)
    assert len(rows) == 1
    row = rows[0]
    assert row.lam == 3
    assert (row.he_adds, row.he_muls) == (170, 119)
    assert (row.star_he_adds, row.star_he_muls) == (17 * 63, 17 * 42)
    assert row.updates == 17
    assert row.path_len == 19
    assert row.seconds > 0
    assert row.star_seconds > 0
    table = format_benchmark_table(rows)
    assert "lambda" in table and "star_muls" in table
    obj = benchmark_to_json(rows, seed=0)
    assert obj["rows"][0]["he_adds"] == 170
    assert obj["mul_243bit_per_sec"] > 0


def test_measure_mul_throughput_positive():
    assert measure_mul_throughput(bits=64, iters=200) > 0
