"""Encrypted trust-accumulating route discovery.

A source node generates a keypair, encrypts the trust it assigns to its best
neighbor bitwise, and sends a route request toward that neighbor.  Each
intermediate node greedily picks its most trusted unvisited neighbor, adds its
own trust for that neighbor into the encrypted accumulator with a ripple
adder, and forwards.  A node that sees the destination among its own
neighbors forwards the request unchanged (its trust is not accumulated and it
does not appear on the path).  The destination answers with a route reply
carrying the accumulated ciphertexts back to the source, which alone can
decrypt the path's total trust.

Intermediate evaluation runs in one of two modes: plain homomorphic XOR/AND
gates reading the accumulator ciphertexts directly, or the universal-gate
pipeline in which the node recovers its accumulator inputs by firing the
adapter triples from the previous hop and evaluates a flag-compiled circuit,
never learning which gates compute what.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Callable

from . import bignum, she
from .bignum import Natural
from .circuits import (
    AdaptedPayload,
    Circuit,
    CircuitInterface,
    EvalStats,
    adapt,
    adder_interface,
    arrange_inputs,
    bind_and_continue,
    build_ripple_adder,
    compile_to_star,
    ct_from_hex,
    ct_to_hex,
    eval_plain,
    payload_from_json,
    payload_to_json,
)
from .she import Ciphertext, KeyPair, SecurityParams

NodeId = int

MIN_TRUST = 1
MAX_TRUST = 10


@dataclass
class NodeState:
    """One node's local view: neighbors, directed trust scores, and its adder."""

    id: NodeId
    neighbors: frozenset[NodeId]
    trust_db: dict[NodeId, int]
    width: int
    circuit: Circuit

    def __post_init__(self) -> None:
        if self.id in self.neighbors:
            raise ValueError(f"node {self.id} cannot neighbor itself")
        unknown = set(self.trust_db) - set(self.neighbors)
        if unknown:
            raise ValueError(f"node {self.id} has trust for non-neighbors {sorted(unknown)}")
        for nb, t in self.trust_db.items():
            if not MIN_TRUST <= t <= MAX_TRUST:
                raise ValueError(
                    f"node {self.id} trust for {nb} is {t}, outside [{MIN_TRUST}, {MAX_TRUST}]"
                )
        if self.circuit.num_inputs != 2 * self.width:
            raise ValueError(
                f"node {self.id} circuit takes {self.circuit.num_inputs} inputs, "
                f"expected {2 * self.width}"
            )

    @property
    def interface(self) -> CircuitInterface:
        return adder_interface(self.width)


def make_node(
    node_id: NodeId, neighbors, trust_db: dict[NodeId, int], width: int = 4
) -> NodeState:
    return NodeState(
        id=node_id,
        neighbors=frozenset(neighbors),
        trust_db=dict(trust_db),
        width=width,
        circuit=build_ripple_adder(width),
    )


@dataclass(frozen=True)
class RouteRequest:
    pk: Natural
    params: SecurityParams
    source: NodeId
    destination: NodeId
    next_hop: NodeId
    path: tuple[NodeId, ...]
    acc_trust: tuple[Ciphertext, ...]
    payload: AdaptedPayload
    stats_so_far: EvalStats

    def __post_init__(self) -> None:
        if not self.path or self.path[0] != self.source:
            raise ValueError(f"path must start at the source {self.source}, got {self.path}")
        if len(set(self.path)) != len(self.path):
            raise ValueError(f"path revisits a node: {self.path}")
        if self.source == self.destination:
            raise ValueError(f"source and destination coincide: {self.source}")


@dataclass(frozen=True)
class RouteReply:
    path: tuple[NodeId, ...]
    acc_trust: tuple[Ciphertext, ...]
    stats: EvalStats


@dataclass(frozen=True)
class Reply:
    reply: RouteReply


@dataclass(frozen=True)
class ForwardUnchanged:
    next_hop: NodeId


@dataclass(frozen=True)
class ForwardUpdated:
    rr: RouteRequest
    node_stats: EvalStats


@dataclass(frozen=True)
class Drop:
    reason: str


ForwardDecision = Reply | ForwardUnchanged | ForwardUpdated | Drop


@dataclass(frozen=True)
class DiscoveryOutcome:
    path: tuple[NodeId, ...]
    trust: int
    trusted: bool


def select_next_hop(node: NodeState, exclude: set[NodeId]) -> NodeId | None:
    """The neighbor with the highest trust score, smallest id on ties."""
    best: NodeId | None = None
    best_trust = MIN_TRUST - 1
    for nb in sorted(node.trust_db):
        if nb in exclude:
            continue
        if node.trust_db[nb] > best_trust:
            best, best_trust = nb, node.trust_db[nb]
    return best


IfaceLookup = Callable[[NodeId], CircuitInterface]


def source_initiate(
    node: NodeState,
    destination: NodeId,
    params: SecurityParams,
    rng: random.Random,
    iface_lookup: IfaceLookup | None = None,
    _keys: KeyPair | None = None,
) -> tuple[KeyPair, RouteRequest]:
    """Generate keys, encrypt the best neighbor's trust, and build the first RR.

    ``_keys`` lets a caller that wants to time key generation separately pass
    a pre-generated pair; the result is identical to generating here.
    """
    if destination == node.id:
        raise ValueError(f"node {node.id} cannot discover a route to itself")
    next_hop = select_next_hop(node, {node.id})
    if next_hop is None:
        raise ValueError(f"source {node.id} has no trusted neighbor to forward to")
    keys = _keys if _keys is not None else she.keygen(params, rng)
    acc = she.encrypt_value(keys.pk, node.trust_db[next_hop], node.width, params, rng)
    iface = iface_lookup(next_hop) if iface_lookup else adder_interface(node.width)
    payload = adapt(acc, iface, keys.pk, params, rng)
    rr = RouteRequest(
        pk=keys.pk,
        params=params,
        source=node.id,
        destination=destination,
        next_hop=next_hop,
        path=(node.id,),
        acc_trust=acc,
        payload=payload,
        stats_so_far=EvalStats(),
    )
    return keys, rr


def process_rr(
    node: NodeState,
    rr: RouteRequest,
    rng: random.Random,
    star_mode: bool = False,
    iface_lookup: IfaceLookup | None = None,
) -> ForwardDecision:
    """One node's handling of an incoming route request.

    Decision order: deliver if this node is the destination; drop requests
    addressed elsewhere or revisiting this node; forward unchanged when the
    destination is a direct neighbor; otherwise accumulate local trust toward
    the greedily chosen next hop and forward the updated request.
    """
    params = rr.params
    if node.id == rr.destination:
        return Reply(destination_reply(rr))
    if rr.next_hop != node.id:
        return Drop(f"misdelivered: request addressed to {rr.next_hop}, not {node.id}")
    if node.id in rr.path:
        return Drop(f"revisit: node {node.id} already on path {list(rr.path)}")
    if rr.destination in node.neighbors:
        return ForwardUnchanged(next_hop=rr.destination)
    exclude = set(rr.path) | {node.id}
    next_hop = select_next_hop(node, exclude)
    if next_hop is None:
        return Drop(f"no trusted next hop: node {node.id} exhausted its neighbors")
    pk = rr.pk
    try:
        local = she.encrypt_value(pk, node.trust_db[next_hop], node.width, params, rng)
        if star_mode:
            star_circuit = compile_to_star(node.circuit, pk, params, rng)
            outputs, node_stats = bind_and_continue(rr.payload, local, star_circuit, pk, params)
        else:
            inputs = arrange_inputs(rr.payload.interface, rr.acc_trust, local)
            outputs, node_stats = eval_plain(node.circuit, inputs, pk, params, rng=rng)
        next_iface = iface_lookup(next_hop) if iface_lookup else adder_interface(node.width)
        new_payload = adapt(outputs, next_iface, pk, params, rng)
    except ValueError as exc:
        return Drop(f"malformed payload: {exc}")
    updated = replace(
        rr,
        next_hop=next_hop,
        path=rr.path + (node.id,),
        acc_trust=outputs,
        payload=new_payload,
        stats_so_far=rr.stats_so_far.merge(node_stats),
    )
    return ForwardUpdated(rr=updated, node_stats=node_stats)


def destination_reply(rr: RouteRequest) -> RouteReply:
    """The destination's answer: final path and the accumulated ciphertexts."""
    return RouteReply(
        path=rr.path + (rr.destination,),
        acc_trust=rr.acc_trust,
        stats=rr.stats_so_far.copy(),
    )


def source_finalize(
    keys: KeyPair, rp: RouteReply, params: SecurityParams
) -> DiscoveryOutcome:
    """Decrypt the accumulated trust; trusted only if every noise bound held."""
    trust = she.decrypt_value(keys.sk, rp.acc_trust)
    trusted = all(she.noise_ok(ct, params) for ct in rp.acc_trust)
    return DiscoveryOutcome(path=rp.path, trust=trust, trusted=trusted)


def rr_to_json(rr: RouteRequest) -> dict:
    return {
        "pk": bignum.to_hex(rr.pk),
        "lambda": rr.params.lam,
        "eta": rr.params.eta,
        "reduce_mod_pk": rr.params.reduce_mod_pk,
        "width": len(rr.acc_trust),
        "source": rr.source,
        "destination": rr.destination,
        "next_hop": rr.next_hop,
        "path": list(rr.path),
        "acc_trust": [ct_to_hex(ct) for ct in rr.acc_trust],
        "acc_trust_noise_bits": [ct.noise_bits for ct in rr.acc_trust],
        "payload": payload_to_json(rr.payload),
        "stats": rr.stats_so_far.to_json(),
    }


def rr_from_json(obj: dict) -> RouteRequest:
    params = SecurityParams.from_lambda(
        obj["lambda"], eta=obj["eta"], reduce_mod_pk=obj.get("reduce_mod_pk", True)
    )
    acc = tuple(
        ct_from_hex(hx, nb)
        for hx, nb in zip(obj["acc_trust"], obj["acc_trust_noise_bits"], strict=True)
    )
    return RouteRequest(
        pk=bignum.from_hex(obj["pk"]),
        params=params,
        source=obj["source"],
        destination=obj["destination"],
        next_hop=obj["next_hop"],
        path=tuple(obj["path"]),
        acc_trust=acc,
        payload=payload_from_json(obj["payload"]),
        stats_so_far=EvalStats.from_json(obj["stats"]),
    )


def rp_to_json(rp: RouteReply) -> dict:
    return {
        "path": list(rp.path),
        "acc_trust": [ct_to_hex(ct) for ct in rp.acc_trust],
        "acc_trust_noise_bits": [ct.noise_bits for ct in rp.acc_trust],
        "stats": rp.stats.to_json(),
    }


def rp_from_json(obj: dict) -> RouteReply:
    acc = tuple(
        ct_from_hex(hx, nb)
        for hx, nb in zip(obj["acc_trust"], obj["acc_trust_noise_bits"], strict=True)
    )
    return RouteReply(
        path=tuple(obj["path"]),
        acc_trust=acc,
        stats=EvalStats.from_json(obj["stats"]),
    )
