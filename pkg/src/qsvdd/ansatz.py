"""QCNN and QAE circuit builders."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .sim import Gate, SimulationError, apply_gate, n_qubits_of, su4_gates

SCHEMA_VERSION = "qsvdd.circuit/1"


class AnsatzError(ValueError):
    pass


@dataclass(frozen=True)
class QcnnShape:
    n_qubits: int = 8
    convs_per_block: int = 2
    final_conv: bool = True
    sharing: bool = True

    def __post_init__(self):
        n = self.n_qubits
        if n < 4 or n & (n - 1):
            raise AnsatzError(f"QCNN needs a power-of-two qubit count >= 4, got {n}")
        if self.convs_per_block < 1:
            raise AnsatzError("convs_per_block must be >= 1")


@dataclass(frozen=True)
class QaeShape:
    n: int = 8
    n_t: int = 6
    l: int = 9  # noqa: E741

    def __post_init__(self):
        if not 0 < self.n_t < self.n:
            raise AnsatzError(f"need 0 < n_t < n, got n={self.n}, n_t={self.n_t}")
        if self.l < 1:
            raise AnsatzError("QAE needs at least one layer")

    @property
    def p(self) -> int:
        return self.n_t + self.n * self.l

    @property
    def d_c(self) -> int:
        return 1 + (comb(self.n_t, 2) + self.n_t * (self.n - self.n_t) + 1) * self.l


@dataclass(frozen=True)
class CircuitProgram:
    n_qubits: int
    gates: tuple[Gate, ...]
    slot_count: int
    output_qubits: tuple[int, ...]
    active_schedule: tuple[tuple[int, ...], ...]
    family: str = "custom"
    shape: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        used = set()
        for gate, active in zip(self.gates, self.active_schedule):
            if any(q >= self.n_qubits for q in gate.qubits):
                raise AnsatzError(f"gate {gate} exceeds {self.n_qubits} qubits")
            if not set(gate.qubits) <= set(active):
                raise AnsatzError(f"gate {gate} touches a pooled-out qubit")
            used.update(gate.slots)
        if len(self.active_schedule) != len(self.gates):
            raise AnsatzError("active_schedule must have one entry per gate")
        if used != set(range(self.slot_count)):
            raise AnsatzError("slots must be exactly 0..slot_count-1, each referenced")

    @property
    def sharing_map(self) -> dict[tuple[int, int], int]:
        """(gate index, position in gate) -> slot."""
        return {
            (g, k): s for g, gate in enumerate(self.gates) for k, s in enumerate(gate.slots)
        }

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "family": self.family,
            "shape": dict(self.shape),
            "n_qubits": self.n_qubits,
            "slot_count": self.slot_count,
            "output_qubits": list(self.output_qubits),
            "gates": [
                {
                    "kind": g.kind,
                    "qubits": list(g.qubits),
                    "slots": list(g.slots),
                    "moment": g.moment,
                    "tag": g.tag,
                    "active": list(a),
                }
                for g, a in zip(self.gates, self.active_schedule)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "CircuitProgram":
        if data.get("schema") != SCHEMA_VERSION:
            raise AnsatzError(f"unsupported circuit schema {data.get('schema')!r}")
        gates = tuple(
            Gate(g["kind"], tuple(g["qubits"]), tuple(g["slots"]), g["moment"], g["tag"])
            for g in data["gates"]
        )
        return cls(
            n_qubits=data["n_qubits"],
            gates=gates,
            slot_count=data["slot_count"],
            output_qubits=tuple(data["output_qubits"]),
            active_schedule=tuple(tuple(g["active"]) for g in data["gates"]),
            family=data["family"],
            shape=dict(data["shape"]),
        )

    def schema_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def conv_pairs(active: list[int]) -> list[tuple[int, int]]:
    """Even-offset pairs, then odd-offset pairs including the wraparound."""
    k = len(active)
    if k == 2:
        return [(active[0], active[1])]
    even = [(active[i], active[i + 1]) for i in range(0, k - 1, 2)]
    odd = [(active[i], active[(i + 1) % k]) for i in range(1, k, 2)]
    return even + odd


def build_qcnn(shape: QcnnShape = QcnnShape()) -> CircuitProgram:
    gates: list[Gate] = []
    schedule: list[tuple[int, ...]] = []
    active = list(range(shape.n_qubits))
    next_slot = 0
    moment = 0
    conv_index = 0

    def conv_layer():
        nonlocal next_slot, moment, conv_index
        conv_index += 1
        tag = f"conv{conv_index}"
        shared = tuple(range(next_slot, next_slot + 15))
        if shape.sharing:
            next_slot += 15
        pairs = conv_pairs(active)
        half = len(pairs) // 2 if len(active) > 2 else len(pairs)
        for i, (a, b) in enumerate(pairs):
            if shape.sharing:
                slots = shared
            else:
                slots = tuple(range(next_slot, next_slot + 15))
                next_slot += 15
            stage = moment + (0 if i < half else 1)
            for g in su4_gates(a, b, slots, stage, tag):
                gates.append(g)
                schedule.append(tuple(active))
        moment += 1 if len(active) == 2 else 2

    while len(active) > 2:
        for _ in range(shape.convs_per_block):
            conv_layer()
        active = active[::2]
    if shape.final_conv:
        conv_layer()

    return CircuitProgram(
        n_qubits=shape.n_qubits,
        gates=tuple(gates),
        slot_count=next_slot,
        output_qubits=tuple(active),
        active_schedule=tuple(schedule),
        family="qcnn",
        shape={
            "n_qubits": shape.n_qubits,
            "convs_per_block": shape.convs_per_block,
            "final_conv": shape.final_conv,
            "sharing": shape.sharing,
        },
    )


def build_qae(shape: QaeShape = QaeShape()) -> CircuitProgram:
    n, n_t = shape.n, shape.n_t
    trash = list(range(n_t))
    latent = list(range(n_t, n))
    gates: list[Gate] = []
    slot = 0
    moment = 0

    for q in trash:
        gates.append(Gate("RY", (q,), (slot,), moment, "init"))
        slot += 1
    moment += 1
    for layer in range(1, shape.l + 1):
        tag = f"layer{layer}"
        for q in range(n):
            gates.append(Gate("RY", (q,), (slot,), moment, tag))
            slot += 1
        moment += 1
        pairs = [(i, j) for i in trash for j in trash if i < j]
        pairs += [(i, j) for i in trash for j in latent]
        for pair in pairs:
            gates.append(Gate("CNOT", pair, (), moment, tag))
            moment += 1

    all_q = tuple(range(n))
    return CircuitProgram(
        n_qubits=n,
        gates=tuple(gates),
        slot_count=slot,
        output_qubits=tuple(latent),
        active_schedule=(all_q,) * len(gates),
        family="qae",
        shape={"n": n, "n_t": n_t, "l": shape.l},
    )


def count_params(program: CircuitProgram) -> int:
    return program.slot_count


def count_depth(program: CircuitProgram) -> int:
    """Number of sequential stages.

    QAE: each rotation layer and each CNOT is one stage.  QCNN: each half of a
    convolution layer (a set of disjoint SU(4) blocks) is one stage.  Other
    programs get an as-soon-as-possible layering with one stage per gate.
    """
    if not program.gates:
        return 0
    if program.family in ("qae", "qcnn"):
        return max(g.moment for g in program.gates) + 1
    level = [0] * program.n_qubits
    for g in program.gates:
        d = max(level[q] for q in g.qubits) + 1
        for q in g.qubits:
            level[q] = d
    return max(level)


def execute(program: CircuitProgram, params, state: np.ndarray) -> np.ndarray:
    """Apply the program gate by gate.  ``state`` may carry a leading batch axis."""
    params = np.asarray(params, dtype=float)
    if params.shape != (program.slot_count,):
        raise AnsatzError(
            f"program has {program.slot_count} parameters, got shape {params.shape}"
        )
    state = np.asarray(state, dtype=complex)
    if n_qubits_of(state) != program.n_qubits:
        raise SimulationError(
            f"program acts on {program.n_qubits} qubits, state has {n_qubits_of(state)}"
        )
    for gate in program.gates:
        state = apply_gate(state, gate, params)
    return state


def diagram(program: CircuitProgram) -> str:
    """Text rendering, one line per stage."""
    lines = [
        f"{program.family} circuit on {program.n_qubits} qubits, "
        f"output qubits {list(program.output_qubits)}",
        f"parameters: {count_params(program)}, depth: {count_depth(program)}",
    ]
    stages: dict[int, list[str]] = {}
    if program.family == "qcnn":
        # build_qcnn emits each SU(4) block as 10 consecutive gates
        for start in range(0, len(program.gates), 10):
            first, second, last = program.gates[start], program.gates[start + 1], program.gates[start + 9]
            a, b = first.qubits[0], second.qubits[0]
            stages.setdefault(first.moment, []).append(
                f"{first.tag}:SU4(q{a},q{b})[{first.slots[0]}..{last.slots[-1]}]"
            )
    else:
        for g in program.gates:
            qs = ",".join(f"q{q}" for q in g.qubits)
            sl = "" if not g.slots else "[" + ",".join(str(s) for s in g.slots) + "]"
            stages.setdefault(g.moment, []).append(f"{g.kind}({qs}){sl}")
    width = len(str(max(stages) if stages else 0))
    for m in sorted(stages):
        lines.append(f"  {m:>{width}} | " + "  ".join(stages[m]))
    return "\n".join(lines)
