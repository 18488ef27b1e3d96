"""Boolean circuits over encrypted bits.

Circuits are DAGs of two-input XOR/AND gates over input wires, earlier gate
outputs, and constants.  They can be evaluated three ways: on plaintext bits
(the reference semantics), on ciphertexts with plain homomorphic gates, or on
ciphertexts after compilation to flag-configured universal gates, where every
gate computes ``(a xor b) xor flag*((a and b) xor (a xor b))`` and the
encrypted flag selects AND (1) or XOR (0).  A compiled circuit reveals the
topology but not which gates are which.

Multi-hop chaining runs through an adapter: each output ciphertext is wrapped
into an identity universal-gate triple ``(out, Enc(0), Enc(0))`` addressed to
the next evaluator's input layout, which recovers its accumulator inputs by
firing the triples and binds its own freshly encrypted local inputs.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Sequence

from . import bignum, she
from .bignum import Natural
from .she import Ciphertext, SecurityParams

XOR = "XOR"
AND = "AND"

INPUT = "INPUT"
GATE = "GATE"
CONST = "CONST"


@dataclass(frozen=True, slots=True)
class WireRef:
    """A gate operand: an input index, an earlier gate's output, or a constant bit."""

    kind: str
    index: int = 0
    bit: int = 0

    def __post_init__(self) -> None:
        if self.kind not in (INPUT, GATE, CONST):
            raise ValueError(f"unknown wire kind: {self.kind!r}")
        if self.index < 0:
            raise ValueError(f"wire index cannot be negative: {self.index}")
        if self.bit not in (0, 1):
            raise ValueError(f"constant bit must be 0 or 1, got {self.bit}")


def input_wire(index: int) -> WireRef:
    return WireRef(kind=INPUT, index=index)


def gate_wire(index: int) -> WireRef:
    return WireRef(kind=GATE, index=index)


def const_wire(bit: int) -> WireRef:
    return WireRef(kind=CONST, bit=bit)


@dataclass(frozen=True, slots=True)
class Gate:
    kind: str
    a: WireRef
    b: WireRef

    def __post_init__(self) -> None:
        if self.kind not in (XOR, AND):
            raise ValueError(f"gate kind must be XOR or AND, got {self.kind!r}")


def _check_wire(wire: WireRef, num_inputs: int, position: int, where: str) -> None:
    if wire.kind == INPUT and wire.index >= num_inputs:
        raise ValueError(f"{where}: input wire {wire.index} out of range (num_inputs={num_inputs})")
    if wire.kind == GATE and wire.index >= position:
        raise ValueError(f"{where}: gate wire {wire.index} does not precede position {position}")


def _validate_dag(
    num_inputs: int, operand_pairs: Sequence[tuple[WireRef, WireRef]], outputs: Sequence[WireRef]
) -> None:
    if num_inputs < 0:
        raise ValueError(f"num_inputs cannot be negative: {num_inputs}")
    for i, (a, b) in enumerate(operand_pairs):
        _check_wire(a, num_inputs, i, f"gate {i}")
        _check_wire(b, num_inputs, i, f"gate {i}")
    for j, out in enumerate(outputs):
        _check_wire(out, num_inputs, len(operand_pairs), f"output {j}")


@dataclass(frozen=True, slots=True)
class Circuit:
    num_inputs: int
    gates: tuple[Gate, ...]
    outputs: tuple[WireRef, ...]

    def __post_init__(self) -> None:
        _validate_dag(self.num_inputs, [(g.a, g.b) for g in self.gates], self.outputs)

    @property
    def xor_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == XOR)

    @property
    def and_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == AND)


@dataclass(frozen=True, slots=True)
class StarGate:
    """A universal gate instance: operands plus an encrypted behavior flag."""

    a: WireRef
    b: WireRef
    flag: Ciphertext


@dataclass(frozen=True, slots=True)
class StarCircuit:
    num_inputs: int
    gates: tuple[StarGate, ...]
    outputs: tuple[WireRef, ...]

    def __post_init__(self) -> None:
        _validate_dag(self.num_inputs, [(g.a, g.b) for g in self.gates], self.outputs)


@dataclass
class EvalStats:
    """Exact tallies of homomorphic operations plus observed noise and wall time."""

    n_he_add: int = 0
    n_he_mul: int = 0
    max_noise_bits: int = 0
    wall_time: float = 0.0

    def record_add(self, ct: Ciphertext) -> None:
        self.n_he_add += 1
        self.observe(ct)

    def record_mul(self, ct: Ciphertext) -> None:
        self.n_he_mul += 1
        self.observe(ct)

    def observe(self, ct: Ciphertext) -> None:
        if ct.noise_bits > self.max_noise_bits:
            self.max_noise_bits = ct.noise_bits

    def merge(self, other: "EvalStats") -> "EvalStats":
        return EvalStats(
            n_he_add=self.n_he_add + other.n_he_add,
            n_he_mul=self.n_he_mul + other.n_he_mul,
            max_noise_bits=max(self.max_noise_bits, other.max_noise_bits),
            wall_time=self.wall_time + other.wall_time,
        )

    def copy(self) -> "EvalStats":
        return EvalStats(self.n_he_add, self.n_he_mul, self.max_noise_bits, self.wall_time)

    def to_json(self) -> dict:
        return {
            "adds": self.n_he_add,
            "muls": self.n_he_mul,
            "max_noise_bits": self.max_noise_bits,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalStats":
        return cls(
            n_he_add=obj["adds"],
            n_he_mul=obj["muls"],
            max_noise_bits=obj["max_noise_bits"],
            wall_time=obj["wall_time"],
        )


def star_eval(
    a: Ciphertext,
    b: Ciphertext,
    flag: Ciphertext,
    pk: Natural,
    params: SecurityParams,
    stats: EvalStats | None = None,
) -> Ciphertext:
    """One universal gate: (a xor b) xor flag * ((a and b) xor (a xor b)).

    Costs exactly 2 homomorphic multiplications and 3 additions.
    """
    t1 = she.he_mul(a, b, pk, params)
    t2 = she.he_add(a, b, pk, params)
    t3 = she.he_add(t1, t2, pk, params)
    t4 = she.he_mul(flag, t3, pk, params)
    out = she.he_add(t2, t4, pk, params)
    if stats is not None:
        stats.record_mul(t1)
        stats.record_add(t2)
        stats.record_add(t3)
        stats.record_mul(t4)
        stats.record_add(out)
    return out


def star_noise_bits(na: int, nb: int, nf: int) -> int:
    """Noise bound of star_eval's output, mirroring its operation sequence."""
    t1 = she.mul_noise_bits(na, nb)
    t2 = she.add_noise_bits(na, nb)
    t3 = she.add_noise_bits(t1, t2)
    t4 = she.mul_noise_bits(nf, t3)
    return she.add_noise_bits(t2, t4)


def symbolic_output_noise(
    circuit: Circuit, input_noise: Sequence[int], fresh: int, star_mode: bool = False
) -> tuple[int, ...]:
    """Propagate noise bounds through the circuit without touching ciphertexts.

    ``fresh`` is the noise bound assumed for constants and, in star mode, for
    the encrypted gate flags.  Gate outputs dominate the noise of everything
    feeding them, so the returned per-output bounds cover every intermediate
    wire that influences an output.
    """
    if len(input_noise) != circuit.num_inputs:
        raise ValueError(f"expected {circuit.num_inputs} noise bounds, got {len(input_noise)}")
    produced: list[int] = []

    def resolve(w: WireRef) -> int:
        if w.kind == INPUT:
            return input_noise[w.index]
        if w.kind == GATE:
            return produced[w.index]
        return fresh

    for g in circuit.gates:
        na, nb = resolve(g.a), resolve(g.b)
        if star_mode:
            produced.append(star_noise_bits(na, nb, fresh))
        elif g.kind == XOR:
            produced.append(she.add_noise_bits(na, nb))
        else:
            produced.append(she.mul_noise_bits(na, nb))
    return tuple(resolve(o) for o in circuit.outputs)


def compile_to_star(
    circuit: Circuit, pk: Natural, params: SecurityParams, rng: random.Random
) -> StarCircuit:
    """Replace every gate with a universal gate whose encrypted flag selects its kind."""
    gates = tuple(
        StarGate(a=g.a, b=g.b, flag=she.encrypt_bit(pk, 1 if g.kind == AND else 0, params, rng))
        for g in circuit.gates
    )
    return StarCircuit(num_inputs=circuit.num_inputs, gates=gates, outputs=circuit.outputs)


def eval_bits(circuit: Circuit, bits: Sequence[int]) -> tuple[int, ...]:
    """Reference plaintext semantics."""
    if len(bits) != circuit.num_inputs:
        raise ValueError(f"expected {circuit.num_inputs} input bits, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("input bits must be 0 or 1")
    produced: list[int] = []

    def resolve(w: WireRef) -> int:
        if w.kind == INPUT:
            return bits[w.index]
        if w.kind == GATE:
            return produced[w.index]
        return w.bit

    for g in circuit.gates:
        a, b = resolve(g.a), resolve(g.b)
        produced.append(a ^ b if g.kind == XOR else a & b)
    return tuple(resolve(o) for o in circuit.outputs)


def _const_ct(
    bit: int, pk: Natural, params: SecurityParams, rng: random.Random | None, stats: EvalStats
) -> Ciphertext:
    # Without an rng the constant is embedded as the trivial ciphertext of
    # itself, which is valid but reveals the bit; pass an rng to rerandomize.
    if rng is not None:
        ct = she.encrypt_bit(pk, bit, params, rng)
    else:
        ct = Ciphertext(value=Natural(bit), noise_bits=1)
    stats.observe(ct)
    return ct


def eval_plain(
    circuit: Circuit,
    inputs: Sequence[Ciphertext],
    pk: Natural,
    params: SecurityParams,
    rng: random.Random | None = None,
) -> tuple[tuple[Ciphertext, ...], EvalStats]:
    """Evaluate with plain homomorphic gates (XOR as add, AND as mul)."""
    if len(inputs) != circuit.num_inputs:
        raise ValueError(f"expected {circuit.num_inputs} inputs, got {len(inputs)}")
    stats = EvalStats()
    t0 = time.perf_counter()
    produced: list[Ciphertext] = []

    def resolve(w: WireRef) -> Ciphertext:
        if w.kind == INPUT:
            return inputs[w.index]
        if w.kind == GATE:
            return produced[w.index]
        return _const_ct(w.bit, pk, params, rng, stats)

    for g in circuit.gates:
        a, b = resolve(g.a), resolve(g.b)
        if g.kind == XOR:
            out = she.he_add(a, b, pk, params)
            stats.record_add(out)
        else:
            out = she.he_mul(a, b, pk, params)
            stats.record_mul(out)
        produced.append(out)
    outputs = tuple(resolve(o) for o in circuit.outputs)
    stats.wall_time = time.perf_counter() - t0
    return outputs, stats


def eval_star(
    circuit: StarCircuit,
    inputs: Sequence[Ciphertext],
    pk: Natural,
    params: SecurityParams,
    rng: random.Random | None = None,
) -> tuple[tuple[Ciphertext, ...], EvalStats]:
    """Evaluate a compiled circuit; every gate fires as a universal gate."""
    if len(inputs) != circuit.num_inputs:
        raise ValueError(f"expected {circuit.num_inputs} inputs, got {len(inputs)}")
    stats = EvalStats()
    t0 = time.perf_counter()
    produced: list[Ciphertext] = []

    def resolve(w: WireRef) -> Ciphertext:
        if w.kind == INPUT:
            return inputs[w.index]
        if w.kind == GATE:
            return produced[w.index]
        return _const_ct(w.bit, pk, params, rng, stats)

    for g in circuit.gates:
        produced.append(star_eval(resolve(g.a), resolve(g.b), g.flag, pk, params, stats))
    outputs = tuple(resolve(o) for o in circuit.outputs)
    stats.wall_time = time.perf_counter() - t0
    return outputs, stats


def build_ripple_adder(width: int) -> Circuit:
    """LSB-first ripple-carry adder computing (A + B) mod 2**width.

    Inputs 0..width-1 are A's bits, width..2*width-1 are B's bits.  A half
    adder (1 XOR, 1 AND) seeds the carry; each further position is a full
    adder of 3 XOR and 2 AND.  The final carry is discarded.
    """
    if width < 1:
        raise ValueError(f"width must be positive, got {width}")
    gates: list[Gate] = []
    outputs: list[WireRef] = []

    def a_bit(i: int) -> WireRef:
        return input_wire(i)

    def b_bit(i: int) -> WireRef:
        return input_wire(width + i)

    gates.append(Gate(XOR, a_bit(0), b_bit(0)))
    outputs.append(gate_wire(0))
    gates.append(Gate(AND, a_bit(0), b_bit(0)))
    carry = gate_wire(1)
    for i in range(1, width):
        axb = gate_wire(len(gates))
        gates.append(Gate(XOR, a_bit(i), b_bit(i)))
        outputs.append(gate_wire(len(gates)))
        gates.append(Gate(XOR, axb, carry))
        t = gate_wire(len(gates))
        gates.append(Gate(AND, a_bit(i), b_bit(i)))
        u = gate_wire(len(gates))
        gates.append(Gate(AND, carry, axb))
        carry = gate_wire(len(gates))
        gates.append(Gate(XOR, t, u))
    return Circuit(num_inputs=2 * width, gates=tuple(gates), outputs=tuple(outputs))


@dataclass(frozen=True, slots=True)
class CircuitInterface:
    """An evaluator's input contract.

    ``layout`` maps input positions to labels: ``ACC_i`` for the i-th
    accumulator bit arriving from the previous hop, ``LOCAL_j`` for the j-th
    locally supplied bit.
    """

    num_acc_inputs: int
    num_local_inputs: int
    layout: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.layout) != self.num_acc_inputs + self.num_local_inputs:
            raise ValueError(
                f"layout has {len(self.layout)} labels, expected "
                f"{self.num_acc_inputs + self.num_local_inputs}"
            )
        expected = {f"ACC_{i}" for i in range(self.num_acc_inputs)} | {
            f"LOCAL_{j}" for j in range(self.num_local_inputs)
        }
        if set(self.layout) != expected or len(set(self.layout)) != len(self.layout):
            raise ValueError(f"layout must name each ACC_i and LOCAL_j exactly once: {self.layout}")

    def to_json(self) -> dict:
        return {
            "acc": self.num_acc_inputs,
            "local": self.num_local_inputs,
            "layout": list(self.layout),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CircuitInterface":
        return cls(
            num_acc_inputs=obj["acc"],
            num_local_inputs=obj["local"],
            layout=tuple(obj["layout"]),
        )


def adder_interface(width: int) -> CircuitInterface:
    """The ripple adder's contract: ACC block first, then LOCAL block."""
    return CircuitInterface(
        num_acc_inputs=width,
        num_local_inputs=width,
        layout=tuple(f"ACC_{i}" for i in range(width)) + tuple(f"LOCAL_{j}" for j in range(width)),
    )


@dataclass(frozen=True, slots=True)
class AdaptedPayload:
    """Identity universal-gate triples carrying accumulator bits to the next hop."""

    triples: tuple[tuple[Ciphertext, Ciphertext, Ciphertext], ...]
    interface: CircuitInterface

    def __post_init__(self) -> None:
        if len(self.triples) != self.interface.num_acc_inputs:
            raise ValueError(
                f"payload has {len(self.triples)} triples, interface expects "
                f"{self.interface.num_acc_inputs} accumulator inputs"
            )


def adapt(
    outputs: Sequence[Ciphertext],
    next_iface: CircuitInterface,
    pk: Natural,
    params: SecurityParams,
    rng: random.Random,
) -> AdaptedPayload:
    """Wrap each output as (out, Enc(0), Enc(0)): an identity universal gate.

    Firing the triple computes out xor 0 with a zero flag, so the carried bit
    is preserved while the wire is rerandomized by the fresh encryptions.
    """
    if len(outputs) != next_iface.num_acc_inputs:
        raise ValueError(
            f"{len(outputs)} outputs cannot feed an interface with "
            f"{next_iface.num_acc_inputs} accumulator inputs"
        )
    triples = tuple(
        (out, she.encrypt_bit(pk, 0, params, rng), she.encrypt_bit(pk, 0, params, rng))
        for out in outputs
    )
    return AdaptedPayload(triples=triples, interface=next_iface)


def arrange_inputs(
    iface: CircuitInterface, acc: Sequence[Ciphertext], local: Sequence[Ciphertext]
) -> tuple[Ciphertext, ...]:
    """Order accumulator and local bits into circuit input positions per the layout."""
    if len(acc) != iface.num_acc_inputs:
        raise ValueError(f"expected {iface.num_acc_inputs} accumulator bits, got {len(acc)}")
    if len(local) != iface.num_local_inputs:
        raise ValueError(f"expected {iface.num_local_inputs} local bits, got {len(local)}")
    ordered = []
    for label in iface.layout:
        role, _, idx = label.rpartition("_")
        ordered.append(acc[int(idx)] if role == "ACC" else local[int(idx)])
    return tuple(ordered)


def bind_and_continue(
    payload: AdaptedPayload,
    local_bits: Sequence[Ciphertext],
    star_circuit: StarCircuit,
    pk: Natural,
    params: SecurityParams,
) -> tuple[tuple[Ciphertext, ...], EvalStats]:
    """Recover accumulator bits from the payload's triples, bind local bits, evaluate."""
    stats = EvalStats()
    t0 = time.perf_counter()
    recovered = [star_eval(a, b, flag, pk, params, stats) for (a, b, flag) in payload.triples]
    stats.wall_time = time.perf_counter() - t0
    inputs = arrange_inputs(payload.interface, recovered, local_bits)
    outputs, eval_stats = eval_star(star_circuit, inputs, pk, params)
    return outputs, stats.merge(eval_stats)


# JSON wire formats.  Ciphertexts serialize as canonical hex with the noise
# bound carried in a parallel field.

def wire_to_json(w: WireRef) -> dict:
    if w.kind == CONST:
        return {"kind": CONST, "bit": w.bit}
    return {"kind": w.kind, "index": w.index}


def wire_from_json(obj: dict) -> WireRef:
    kind = obj["kind"]
    if kind == CONST:
        return const_wire(obj["bit"])
    return WireRef(kind=kind, index=obj["index"])


def circuit_to_json(c: Circuit) -> dict:
    return {
        "num_inputs": c.num_inputs,
        "gates": [
            {"kind": g.kind, "a": wire_to_json(g.a), "b": wire_to_json(g.b)} for g in c.gates
        ],
        "outputs": [wire_to_json(o) for o in c.outputs],
    }


def circuit_from_json(obj: dict) -> Circuit:
    return Circuit(
        num_inputs=obj["num_inputs"],
        gates=tuple(
            Gate(kind=g["kind"], a=wire_from_json(g["a"]), b=wire_from_json(g["b"]))
            for g in obj["gates"]
        ),
        outputs=tuple(wire_from_json(o) for o in obj["outputs"]),
    )


def ct_to_hex(ct: Ciphertext) -> str:
    return bignum.to_hex(ct.value)


def ct_from_hex(hex_value: str, noise_bits: int) -> Ciphertext:
    return Ciphertext(value=bignum.from_hex(hex_value), noise_bits=noise_bits)


def star_circuit_to_json(sc: StarCircuit) -> dict:
    return {
        "num_inputs": sc.num_inputs,
        "gates": [
            {
                "a": wire_to_json(g.a),
                "b": wire_to_json(g.b),
                "flag": ct_to_hex(g.flag),
                "flag_noise_bits": g.flag.noise_bits,
            }
            for g in sc.gates
        ],
        "outputs": [wire_to_json(o) for o in sc.outputs],
    }


def star_circuit_from_json(obj: dict) -> StarCircuit:
    return StarCircuit(
        num_inputs=obj["num_inputs"],
        gates=tuple(
            StarGate(
                a=wire_from_json(g["a"]),
                b=wire_from_json(g["b"]),
                flag=ct_from_hex(g["flag"], g["flag_noise_bits"]),
            )
            for g in obj["gates"]
        ),
        outputs=tuple(wire_from_json(o) for o in obj["outputs"]),
    )


def payload_to_json(p: AdaptedPayload) -> dict:
    return {
        "triples": [[ct_to_hex(a), ct_to_hex(b), ct_to_hex(f)] for (a, b, f) in p.triples],
        "triples_noise_bits": [
            [a.noise_bits, b.noise_bits, f.noise_bits] for (a, b, f) in p.triples
        ],
        "iface": p.interface.to_json(),
    }


def payload_from_json(obj: dict) -> AdaptedPayload:
    triples = tuple(
        (ct_from_hex(hx[0], nb[0]), ct_from_hex(hx[1], nb[1]), ct_from_hex(hx[2], nb[2]))
        for hx, nb in zip(obj["triples"], obj["triples_noise_bits"], strict=True)
    )
    return AdaptedPayload(triples=triples, interface=CircuitInterface.from_json(obj["iface"]))
