"""Topologies, plaintext oracle, noise planner, run orchestration, benchmarks.

The simulator drives the encrypted protocol over generated network topologies
and checks it against :func:`plaintext_oracle`, an independent plaintext
implementation of the same greedy walk.  :func:`required_eta` sizes the
secret key for a target hop count by propagating the noise-tracking rules
symbolically through the hop pipeline, so automatically sized runs are
certified correct by construction as long as the tracked bounds hold.
"""

from __future__ import annotations

import contextlib
import json
import random
import time
from dataclasses import dataclass, field
from typing import Sequence

from . import bignum, she
from .circuits import EvalStats, build_ripple_adder, star_noise_bits, symbolic_output_noise
from .protocol import (
    Drop,
    ForwardUnchanged,
    ForwardUpdated,
    NodeId,
    NodeState,
    Reply,
    RouteReply,
    make_node,
    process_rr,
    source_finalize,
    source_initiate,
)
from .she import KeyPair, SecurityParams

DELIVERED = "DELIVERED"
DROPPED = "DROPPED"

# Planner result when the requested depth cannot be certified under the
# noise-bit ceiling.
TOO_DEEP = "TOO_DEEP"


class NoiseBudgetError(ValueError):
    """Automatic key sizing failed: the run is too deep to certify."""


@dataclass(frozen=True)
class Topology:
    """An undirected connected graph with directed per-arc trust scores."""

    nodes: tuple[NodeId, ...]
    edges: tuple[tuple[NodeId, NodeId], ...]
    trust: dict[tuple[NodeId, NodeId], int]

    def __post_init__(self) -> None:
        if not self.nodes:
            raise ValueError("topology has no nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node ids")
        known = set(self.nodes)
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"edge ({a}, {b}) is a self-loop")
            if a not in known or b not in known:
                raise ValueError(f"edge ({a}, {b}) references an unknown node")
            if a > b:
                raise ValueError(f"edge ({a}, {b}) is not normalized (smaller id first)")
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
        expected_arcs = {(a, b) for a, b in self.edges} | {(b, a) for a, b in self.edges}
        if set(self.trust) != expected_arcs:
            missing = sorted(expected_arcs - set(self.trust))
            extra = sorted(set(self.trust) - expected_arcs)
            detail = []
            if missing:
                detail.append(f"missing trust for arcs {missing}")
            if extra:
                detail.append(f"trust for non-edges {extra}")
            raise ValueError("; ".join(detail))
        for arc, t in self.trust.items():
            if not 1 <= t <= 10:
                raise ValueError(f"trust['{arc[0]}->{arc[1]}'] = {t} outside [1, 10]")

    def neighbors(self, node: NodeId) -> frozenset[NodeId]:
        out = set()
        for a, b in self.edges:
            if a == node:
                out.add(b)
            elif b == node:
                out.add(a)
        return frozenset(out)

    def to_json(self) -> dict:
        return {
            "nodes": [{"id": i} for i in sorted(self.nodes)],
            "edges": [list(e) for e in sorted(self.edges)],
            "trust": {f"{a}->{b}": v for (a, b), v in sorted(self.trust.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Topology":
        for key in ("nodes", "edges", "trust"):
            if key not in obj:
                raise ValueError(f"missing field '{key}'")
        nodes = []
        for i, entry in enumerate(obj["nodes"]):
            if not isinstance(entry, dict) or "id" not in entry:
                raise ValueError(f"nodes[{i}] must be an object with an 'id' field")
            if not isinstance(entry["id"], int):
                raise ValueError(f"nodes[{i}].id must be an integer, got {entry['id']!r}")
            nodes.append(entry["id"])
        edges = []
        for i, pair in enumerate(obj["edges"]):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(v, int) for v in pair)
            ):
                raise ValueError(f"edges[{i}] must be a pair of integers, got {pair!r}")
            a, b = pair
            edges.append((min(a, b), max(a, b)))
        trust = {}
        for key, value in obj["trust"].items():
            head, sep, tail = key.partition("->")
            if not sep or not head.lstrip("-").isdigit() or not tail.lstrip("-").isdigit():
                raise ValueError(f"trust key {key!r} is not of the form 'a->b'")
            if not isinstance(value, int):
                raise ValueError(f"trust['{key}'] must be an integer, got {value!r}")
            trust[(int(head), int(tail))] = value
        return cls(nodes=tuple(nodes), edges=tuple(edges), trust=trust)


def save_topology(t: Topology, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(t.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_topology(path: str) -> Topology:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(
                f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
    try:
        return Topology.from_json(obj)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _connected(n: int, adjacency: dict[int, set[int]]) -> bool:
    seen = {0}
    frontier = [0]
    while frontier:
        node = frontier.pop()
        for nb in adjacency[node]:
            if nb not in seen:
                seen.add(nb)
                frontier.append(nb)
    return len(seen) == n


def generate_topology(n: int, avg_degree: float, seed: int) -> Topology:
    """A connected random graph with edge density avg_degree / (n - 1)."""
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    if not 0 < avg_degree <= n - 1:
        raise ValueError(f"average degree {avg_degree} impossible for {n} nodes")
    rng = random.Random(seed)
    p = avg_degree / (n - 1)
    for _ in range(10_000):
        edges = []
        adjacency: dict[int, set[int]] = {i: set() for i in range(n)}
        for a in range(n):
            for b in range(a + 1, n):
                if rng.random() < p:
                    edges.append((a, b))
                    adjacency[a].add(b)
                    adjacency[b].add(a)
        if not _connected(n, adjacency):
            continue
        trust = {}
        for a, b in edges:
            trust[(a, b)] = rng.randint(1, 10)
            trust[(b, a)] = rng.randint(1, 10)
        return Topology(nodes=tuple(range(n)), edges=tuple(edges), trust=trust)
    raise RuntimeError(
        f"no connected topology with n={n} avg_degree={avg_degree} after 10000 attempts"
    )


def chain_topology(n: int, seed: int) -> Topology:
    """Nodes 0..n-1 in a line; realizes the longest greedy path on n nodes."""
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    rng = random.Random(seed)
    edges = tuple((i, i + 1) for i in range(n - 1))
    trust = {}
    for a, b in edges:
        trust[(a, b)] = rng.randint(1, 10)
        trust[(b, a)] = rng.randint(1, 10)
    return Topology(nodes=tuple(range(n)), edges=edges, trust=trust)


def build_nodes(t: Topology, width: int = 4) -> dict[NodeId, NodeState]:
    return {
        i: make_node(i, t.neighbors(i), {nb: t.trust[(i, nb)] for nb in t.neighbors(i)}, width)
        for i in t.nodes
    }


@dataclass(frozen=True)
class OracleResult:
    path: tuple[NodeId, ...]
    trust: int
    status: str


@dataclass(frozen=True)
class _Walk:
    status: str
    path: tuple[NodeId, ...]
    arcs: tuple[tuple[NodeId, NodeId], ...]
    updates: int
    dropped_at: NodeId | None = None
    reason: str | None = None


def _argmax_neighbor(t: Topology, node: NodeId, exclude: set[NodeId]) -> NodeId | None:
    best = None
    best_trust = 0
    for nb in sorted(t.neighbors(node)):
        if nb in exclude:
            continue
        if t.trust[(node, nb)] > best_trust:
            best, best_trust = nb, t.trust[(node, nb)]
    return best


def _greedy_walk(t: Topology, source: NodeId, destination: NodeId) -> _Walk:
    # Plaintext mirror of the protocol's decision rules, written directly
    # against the topology: greedy argmax next hop, path-based exclusion,
    # forward-unchanged shortcut when the destination is a neighbor.
    first = _argmax_neighbor(t, source, {source})
    if first is None:
        return _Walk(DROPPED, (source,), (), 0, dropped_at=source, reason="no trusted next hop")
    path = [source]
    arcs = [(source, first)]
    updates = 0
    current = first
    while True:
        if current == destination:
            return _Walk(DELIVERED, tuple(path) + (destination,), tuple(arcs), updates)
        if destination in t.neighbors(current):
            # forwarded unchanged: current joins neither the path nor the sum
            return _Walk(DELIVERED, tuple(path) + (destination,), tuple(arcs), updates)
        nxt = _argmax_neighbor(t, current, set(path) | {current})
        if nxt is None:
            return _Walk(
                DROPPED,
                tuple(path),
                tuple(arcs),
                updates,
                dropped_at=current,
                reason="no trusted next hop",
            )
        arcs.append((current, nxt))
        path.append(current)
        updates += 1
        current = nxt


def plaintext_oracle(
    t: Topology, source: NodeId, destination: NodeId, width: int = 4
) -> OracleResult:
    """Reference answer: the greedy path and its trust sum mod 2**width."""
    _check_endpoints(t, source, destination)
    walk = _greedy_walk(t, source, destination)
    total = sum(t.trust[arc] for arc in walk.arcs) % (1 << width)
    return OracleResult(path=walk.path, trust=total, status=walk.status)


def _check_endpoints(t: Topology, source: NodeId, destination: NodeId) -> None:
    if source not in t.nodes:
        raise ValueError(f"source {source} not in topology")
    if destination not in t.nodes:
        raise ValueError(f"destination {destination} not in topology")
    if source == destination:
        raise ValueError(f"source and destination coincide: {source}")


def required_eta(
    width: int, hops: int, lam: int, star_mode: bool = False, ceiling: int = 1 << 24
) -> int | str:
    """Secret-key bits needed to certify ``hops`` accumulator updates.

    Propagates the noise-tracking rules symbolically through the hop
    pipeline: in star mode each hop first recovers its accumulator inputs
    through identity universal-gate triples, then evaluates the flag-compiled
    adder; in plain mode the adder reads the accumulator directly.  Returns
    :data:`TOO_DEEP` once any bound exceeds ``ceiling``.
    """
    if width < 1:
        raise ValueError(f"width must be positive, got {width}")
    if hops < 0:
        raise ValueError(f"hops cannot be negative, got {hops}")
    if lam < 2:
        raise ValueError(f"lam must be at least 2, got {lam}")
    fresh = lam + 2
    circuit = build_ripple_adder(width)
    acc = [fresh] * width
    for _ in range(hops):
        if star_mode:
            acc = [star_noise_bits(n, fresh, fresh) for n in acc]
        acc = list(symbolic_output_noise(circuit, acc + [fresh] * width, fresh, star_mode))
        if max(acc) > ceiling:
            return TOO_DEEP
    return max(acc) + 2


@dataclass(frozen=True)
class RunConfig:
    lam: int
    eta: int | None = None  # None sizes the key automatically via required_eta
    width: int = 4
    seed: int = 0
    star_mode: bool = False
    reduce_mod_pk: bool = True


@dataclass
class NoiseAudit:
    """Collects the keypair and every ciphertext produced during a run."""

    keys: KeyPair | None = None
    ciphertexts: list[she.Ciphertext] = field(default_factory=list)


@dataclass(frozen=True)
class RunReport:
    status: str
    path: tuple[NodeId, ...]
    decrypted_trust: int | None
    trusted: bool
    oracle_path: tuple[NodeId, ...]
    oracle_trust: int
    eta: int
    lam: int
    width: int
    star_mode: bool
    seed: int
    stats: EvalStats
    per_node_stats: tuple[tuple[NodeId, EvalStats], ...]
    wall: dict[str, float]
    drop_reason: str | None = None
    dropped_at: NodeId | None = None

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "path": list(self.path),
            "decrypted_trust": self.decrypted_trust,
            "trusted": self.trusted,
            "oracle_path": list(self.oracle_path),
            "oracle_trust": self.oracle_trust,
            "eta": self.eta,
            "lambda": self.lam,
            "width": self.width,
            "star_mode": self.star_mode,
            "seed": self.seed,
            "stats": self.stats.to_json(),
            "per_node_stats": [[node, st.to_json()] for node, st in self.per_node_stats],
            "wall": dict(self.wall),
            "drop_reason": self.drop_reason,
            "dropped_at": self.dropped_at,
        }


def run_discovery(
    t: Topology,
    source: NodeId,
    destination: NodeId,
    cfg: RunConfig,
    audit: NoiseAudit | None = None,
) -> RunReport:
    """Drive one encrypted discovery and compare it against the oracle."""
    _check_endpoints(t, source, destination)
    walk = _greedy_walk(t, source, destination)
    oracle = plaintext_oracle(t, source, destination, cfg.width)
    if cfg.eta is not None:
        eta = cfg.eta
    else:
        eta = required_eta(cfg.width, walk.updates, cfg.lam, cfg.star_mode)
        if eta == TOO_DEEP:
            raise NoiseBudgetError(
                f"cannot certify {walk.updates} updates at width {cfg.width}, "
                f"lam {cfg.lam}, star_mode={cfg.star_mode}"
            )
    params = SecurityParams.from_lambda(cfg.lam, eta=eta, reduce_mod_pk=cfg.reduce_mod_pk)
    nodes = build_nodes(t, cfg.width)
    rng = random.Random(cfg.seed)

    def iface_lookup(node_id: NodeId):
        return nodes[node_id].interface

    with contextlib.ExitStack() as stack:
        if audit is not None:
            stack.enter_context(she.audit_ciphertexts(audit.ciphertexts.append))
        t0 = time.perf_counter()
        keys = she.keygen(params, rng)
        t1 = time.perf_counter()
        if audit is not None:
            audit.keys = keys
        keys, rr = source_initiate(
            nodes[source], destination, params, rng, iface_lookup, _keys=keys
        )
        per_node: list[tuple[NodeId, EvalStats]] = []
        rp: RouteReply | None = None
        drop: Drop | None = None
        current = rr.next_hop
        for _ in range(2 * len(nodes) + 2):
            decision = process_rr(nodes[current], rr, rng, cfg.star_mode, iface_lookup)
            if isinstance(decision, Reply):
                rp = decision.reply
                break
            if isinstance(decision, Drop):
                drop = decision
                break
            if isinstance(decision, ForwardUnchanged):
                current = decision.next_hop
                continue
            assert isinstance(decision, ForwardUpdated)
            per_node.append((current, decision.node_stats))
            rr = decision.rr
            current = rr.next_hop
        else:
            raise RuntimeError("discovery did not terminate; decision loop detected")
        t2 = time.perf_counter()

    wall = {"keygen": t1 - t0, "discovery": t2 - t1, "finalize": 0.0}
    common = dict(
        oracle_path=oracle.path,
        oracle_trust=oracle.trust,
        eta=eta,
        lam=cfg.lam,
        width=cfg.width,
        star_mode=cfg.star_mode,
        seed=cfg.seed,
        per_node_stats=tuple(per_node),
    )
    if drop is not None:
        return RunReport(
            status=DROPPED,
            path=rr.path,
            decrypted_trust=None,
            trusted=False,
            stats=rr.stats_so_far.copy(),
            wall=wall,
            drop_reason=drop.reason,
            dropped_at=current,
            **common,
        )
    t3 = time.perf_counter()
    outcome = source_finalize(keys, rp, params)
    wall["finalize"] = time.perf_counter() - t3
    assert not outcome.trusted or outcome.trust == oracle.trust, (
        f"certified run disagrees with oracle: {outcome.trust} != {oracle.trust}"
    )
    return RunReport(
        status=DELIVERED,
        path=outcome.path,
        decrypted_trust=outcome.trust,
        trusted=outcome.trusted,
        stats=rp.stats.copy(),
        wall=wall,
        **common,
    )


@dataclass(frozen=True)
class BenchRow:
    lam: int
    seconds: float
    he_adds: int
    he_muls: int
    star_seconds: float
    star_he_adds: int
    star_he_muls: int
    path_len: int
    updates: int

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "seconds": self.seconds,
            "he_adds": self.he_adds,
            "he_muls": self.he_muls,
            "star_seconds": self.star_seconds,
            "star_he_adds": self.star_he_adds,
            "star_he_muls": self.star_he_muls,
            "path_len": self.path_len,
            "updates": self.updates,
        }


def measure_mul_throughput(bits: int = 243, iters: int = 2000, seed: int = 0) -> float:
    """Multiplications per second on random operands of the given width."""
    rng = random.Random(seed)
    pairs = [
        (bignum.random_bits(bits, rng), bignum.random_bits(bits, rng)) for _ in range(64)
    ]
    t0 = time.perf_counter()
    for i in range(iters):
        a, b = pairs[i % len(pairs)]
        bignum.mul(a, b)
    return iters / (time.perf_counter() - t0)


def benchmark(
    seed: int = 0, lambdas: Sequence[int] = (3, 5, 8, 10), n: int = 20, width: int = 4
) -> list[BenchRow]:
    """Time full discoveries over an n-node chain at each security level.

    Per row: the plain-gate pipeline and the universal-gate pipeline, both at
    the standard parameter schedule (eta = lam**2).  Reported seconds cover
    source initiation through route reply; key generation and the final
    decryption are excluded.
    """
    t = chain_topology(n, seed)
    rows = []
    for lam in lambdas:
        plain = run_discovery(
            t, 0, n - 1, RunConfig(lam=lam, eta=lam * lam, width=width, seed=seed)
        )
        star = run_discovery(
            t,
            0,
            n - 1,
            RunConfig(lam=lam, eta=lam * lam, width=width, seed=seed, star_mode=True),
        )
        rows.append(
            BenchRow(
                lam=lam,
                seconds=plain.wall["discovery"],
                he_adds=plain.stats.n_he_add,
                he_muls=plain.stats.n_he_mul,
                star_seconds=star.wall["discovery"],
                star_he_adds=star.stats.n_he_add,
                star_he_muls=star.stats.n_he_mul,
                path_len=len(plain.path),
                updates=len(plain.per_node_stats),
            )
        )
    return rows


def format_benchmark_table(rows: Sequence[BenchRow]) -> str:
    header = f"{'lambda':>6} {'seconds':>9} {'adds':>6} {'muls':>6} {'star_s':>9} {'star_adds':>9} {'star_muls':>9} {'path':>5} {'updates':>7}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.lam:>6} {r.seconds:>9.4f} {r.he_adds:>6} {r.he_muls:>6} "
            f"{r.star_seconds:>9.4f} {r.star_he_adds:>9} {r.star_he_muls:>9} "
            f"{r.path_len:>5} {r.updates:>7}"
        )
    return "\n".join(lines)


def benchmark_to_json(rows: Sequence[BenchRow], seed: int, n: int = 20, width: int = 4) -> dict:
    return {
        "seed": seed,
        "n": n,
        "width": width,
        "rows": [r.to_json() for r in rows],
        "mul_243bit_per_sec": measure_mul_throughput(),
    }
