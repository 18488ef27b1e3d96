"""Encrypted trust-based route discovery.

A bit-level somewhat-homomorphic encryption scheme over the integers, boolean
circuit evaluation on encrypted bits (plain XOR/AND gates and flag-configured
universal gates), a chaining adapter for multi-hop evaluation, a greedy
route-discovery protocol that accumulates per-hop trust under encryption, and
a simulator with a plaintext reference oracle, a noise planner, and benchmarks.
"""

from .bignum import Natural, UnderflowError
from .circuits import (
    AdaptedPayload,
    Circuit,
    CircuitInterface,
    EvalStats,
    Gate,
    StarCircuit,
    StarGate,
    WireRef,
    adapt,
    adder_interface,
    arrange_inputs,
    bind_and_continue,
    build_ripple_adder,
    compile_to_star,
    eval_plain,
    eval_star,
    star_eval,
    star_noise_bits,
    symbolic_output_noise,
)
from .protocol import (
    DiscoveryOutcome,
    Drop,
    ForwardUnchanged,
    ForwardUpdated,
    NodeState,
    Reply,
    RouteReply,
    RouteRequest,
    destination_reply,
    make_node,
    process_rr,
    rr_from_json,
    rr_to_json,
    select_next_hop,
    source_finalize,
    source_initiate,
)
from .she import (
    Ciphertext,
    KeyPair,
    SecurityParams,
    audit_ciphertexts,
    decrypt_bit,
    decrypt_value,
    encrypt_bit,
    encrypt_value,
    he_add,
    he_mul,
    keygen,
    noise_ok,
)
from .sim import (
    DELIVERED,
    DROPPED,
    TOO_DEEP,
    NoiseBudgetError,
    OracleResult,
    RunConfig,
    RunReport,
    Topology,
    benchmark,
    build_nodes,
    chain_topology,
    generate_topology,
    load_topology,
    plaintext_oracle,
    required_eta,
    run_discovery,
    save_topology,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptedPayload",
    "Circuit",
    "CircuitInterface",
    "Ciphertext",
    "DELIVERED",
    "DROPPED",
    "DiscoveryOutcome",
    "Drop",
    "EvalStats",
    "ForwardUnchanged",
    "ForwardUpdated",
    "Gate",
    "KeyPair",
    "Natural",
    "NodeState",
    "NoiseBudgetError",
    "OracleResult",
    "Reply",
    "RouteReply",
    "RouteRequest",
    "RunConfig",
    "RunReport",
    "SecurityParams",
    "StarCircuit",
    "StarGate",
    "TOO_DEEP",
    "Topology",
    "UnderflowError",
    "WireRef",
    "adapt",
    "adder_interface",
    "arrange_inputs",
    "audit_ciphertexts",
    "benchmark",
    "bind_and_continue",
    "build_nodes",
    "build_ripple_adder",
    "chain_topology",
    "compile_to_star",
    "decrypt_bit",
    "decrypt_value",
    "destination_reply",
    "encrypt_bit",
    "encrypt_value",
    "eval_plain",
    "eval_star",
    "generate_topology",
    "he_add",
    "he_mul",
    "keygen",
    "load_topology",
    "make_node",
    "noise_ok",
    "plaintext_oracle",
    "process_rr",
    "required_eta",
    "rr_from_json",
    "rr_to_json",
    "run_discovery",
    "save_topology",
    "select_next_hop",
    "source_finalize",
    "source_initiate",
    "star_eval",
    "star_noise_bits",
    "symbolic_output_noise",
]
