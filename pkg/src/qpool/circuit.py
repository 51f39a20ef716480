"""Circuit intermediate representation, text format, and QAOA construction.

Text grammar, one instruction per line ('#' starts a comment):

    qubits <n>
    h|x|y|z <q>
    rx|ry|rz <q> <angle|$slot>
    cx|cz <control> <target>
    noise <q> <duration>
    diagcost <graphfile> <gamma|$slot>

Angles are radians; serialization uses repr so text round-trips losslessly.
Parameter slots ($name) stay symbolic until bound, which lets one circuit run
with per-pool-state values.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import graphs as graphs_mod
from .graphs import Graph

ONE_QUBIT_KINDS = frozenset({"h", "x", "y", "z", "rx", "ry", "rz", "custom"})
ROTATION_KINDS = frozenset({"rx", "ry", "rz"})
TWO_QUBIT_KINDS = frozenset({"cx", "cz"})
ALL_KINDS = ONE_QUBIT_KINDS | TWO_QUBIT_KINDS | {"diagcost", "noise"}

DEFAULT_GATE_DURATION = 1.0


class CircuitParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class UnboundParameterError(ValueError):
    pass


@dataclass(frozen=True)
class GateSpec:
    kind: str
    qubits: tuple[int, ...] = ()
    param: float | str | None = None
    matrix: np.ndarray | None = field(default=None, repr=False)
    graph: Graph | None = None
    graph_path: str | None = None
    duration: float = DEFAULT_GATE_DURATION

    def __post_init__(self) -> None:
        if self.kind not in ALL_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind in TWO_QUBIT_KINDS:
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError(f"{self.kind} needs two distinct qubits")
        elif self.kind != "diagcost" and len(self.qubits) != 1:
            raise ValueError(f"{self.kind} needs exactly one qubit")
        if self.kind == "diagcost" and self.graph is None:
            raise ValueError("diagcost needs a graph")
        if self.kind == "custom" and self.matrix is None:
            raise ValueError("custom gate needs a matrix")

    @property
    def slot(self) -> str | None:
        if isinstance(self.param, str):
            return self.param[1:]
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, GateSpec):
            return NotImplemented
        if (self.kind, self.qubits, self.param, self.graph, self.duration) != (
            other.kind, other.qubits, other.param, other.graph, other.duration
        ):
            return False
        if (self.matrix is None) != (other.matrix is None):
            return False
        return self.matrix is None or bool(np.array_equal(self.matrix, other.matrix))

    __hash__ = None


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple[GateSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("need at least one qubit")
        for g in self.gates:
            for q in g.qubits:
                if not (0 <= q < self.num_qubits):
                    raise ValueError(f"{g.kind} on qubit {q} out of range")
            if g.graph is not None and g.graph.num_vertices > self.num_qubits:
                raise ValueError("diagcost graph larger than register")

    @property
    def slots(self) -> tuple[str, ...]:
        seen: list[str] = []
        for g in self.gates:
            s = g.slot
            if s is not None and s not in seen:
                seen.append(s)
        return tuple(seen)

    def bind(self, bindings: dict[str, float]) -> "Circuit":
        """Substitute slot values; all slots must resolve before execution."""
        new_gates = []
        for g in self.gates:
            s = g.slot
            if s is None:
                new_gates.append(g)
            elif s in bindings:
                new_gates.append(replace(g, param=float(bindings[s])))
            else:
                new_gates.append(g)
        return Circuit(self.num_qubits, tuple(new_gates))

    def require_bound(self) -> None:
        unbound = self.slots
        if unbound:
            raise UnboundParameterError(
                f"unbound parameter slot(s): {', '.join('$' + s for s in unbound)}"
            )


def _parse_param(token: str, lineno: int) -> float | str:
    if token.startswith("$"):
        if len(token) == 1:
            raise CircuitParseError(lineno, "empty slot name")
        return token
    try:
        return float(token)
    except ValueError:
        raise CircuitParseError(lineno, f"bad number {token!r}") from None


def parse_circuit(text: str, graph_dir: str | None = None) -> Circuit:
    """Parse the text format; ``graph_dir`` anchors relative diagcost paths."""
    num_qubits: int | None = None
    gates: list[GateSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op, args = parts[0], parts[1:]
        if op == "qubits":
            if num_qubits is not None:
                raise CircuitParseError(lineno, "repeated qubits header")
            if len(args) != 1:
                raise CircuitParseError(lineno, "expected 'qubits <n>'")
            num_qubits = int(args[0])
            if num_qubits < 1:
                raise CircuitParseError(lineno, "need at least one qubit")
            continue
        if num_qubits is None:
            raise CircuitParseError(lineno, "gate before qubits header")
        try:
            if op in ("h", "x", "y", "z"):
                if len(args) != 1:
                    raise CircuitParseError(lineno, f"expected '{op} <q>'")
                gates.append(GateSpec(op, (int(args[0]),)))
            elif op in ROTATION_KINDS:
                if len(args) != 2:
                    raise CircuitParseError(lineno, f"expected '{op} <q> <angle|$slot>'")
                gates.append(GateSpec(op, (int(args[0]),), _parse_param(args[1], lineno)))
            elif op in TWO_QUBIT_KINDS:
                if len(args) != 2:
                    raise CircuitParseError(lineno, f"expected '{op} <c> <t>'")
                gates.append(GateSpec(op, (int(args[0]), int(args[1]))))
            elif op == "noise":
                if len(args) != 2:
                    raise CircuitParseError(lineno, f"expected 'noise <q> <duration>'")
                duration = float(args[1])
                if duration < 0:
                    raise CircuitParseError(lineno, "negative noise duration")
                gates.append(GateSpec("noise", (int(args[0]),), duration=duration))
            elif op == "diagcost":
                if len(args) != 2:
                    raise CircuitParseError(lineno, "expected 'diagcost <graphfile> <gamma|$slot>'")
                path = args[0]
                full = path if os.path.isabs(path) or graph_dir is None \
                    else os.path.join(graph_dir, path)
                try:
                    graph = graphs_mod.load_graph(full)
                except (OSError, ValueError) as exc:
                    raise CircuitParseError(lineno, f"cannot load graph {path!r}: {exc}")
                gates.append(GateSpec("diagcost", (), _parse_param(args[1], lineno),
                                      graph=graph, graph_path=path))
            else:
                raise CircuitParseError(lineno, f"unknown mnemonic {op!r}")
        except ValueError as exc:
            if isinstance(exc, CircuitParseError):
                raise
            raise CircuitParseError(lineno, str(exc)) from None
    if num_qubits is None:
        raise CircuitParseError(0, "missing 'qubits <n>' header")
    try:
        return Circuit(num_qubits, tuple(gates))
    except ValueError as exc:
        raise CircuitParseError(0, str(exc)) from None


def load_circuit(path) -> Circuit:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_circuit(text, graph_dir=os.path.dirname(os.path.abspath(path)))


def _format_param(param: float | str) -> str:
    return param if isinstance(param, str) else repr(float(param))


def serialize_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.num_qubits}"]
    for g in circuit.gates:
        if g.kind in ("h", "x", "y", "z"):
            lines.append(f"{g.kind} {g.qubits[0]}")
        elif g.kind in ROTATION_KINDS:
            lines.append(f"{g.kind} {g.qubits[0]} {_format_param(g.param)}")
        elif g.kind in TWO_QUBIT_KINDS:
            lines.append(f"{g.kind} {g.qubits[0]} {g.qubits[1]}")
        elif g.kind == "noise":
            lines.append(f"noise {g.qubits[0]} {repr(float(g.duration))}")
        elif g.kind == "diagcost":
            if g.graph_path is None:
                raise ValueError("cannot serialize a diagcost gate without a graph file path")
            lines.append(f"diagcost {g.graph_path} {_format_param(g.param)}")
        else:
            raise ValueError(f"kind {g.kind!r} has no text form")
    return "\n".join(lines) + "\n"


def gamma_slot(k: int) -> str:
    return f"gamma{k}"


def beta_slot(k: int) -> str:
    return f"beta{k}"


def build_qaoa_circuit(graph: Graph, depth: int, graph_path: str | None = None) -> Circuit:
    """Alternating cost/mixer circuit for MaxCut on ``graph``.

    Layer k applies the diagonal cut-phase with slot gamma_k, then RX mixers
    carrying slot beta_k on every qubit. Use :func:`qaoa_bindings` to bind a
    2p-dimensional parameter point; the mixer rotation angle is 2*beta, so
    beta keeps its conventional range.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n = graph.num_vertices
    gates: list[GateSpec] = [GateSpec("h", (q,)) for q in range(n)]
    for k in range(1, depth + 1):
        gates.append(GateSpec("diagcost", (), "$" + gamma_slot(k),
                              graph=graph, graph_path=graph_path))
        gates.extend(GateSpec("rx", (q,), "$" + beta_slot(k)) for q in range(n))
    return Circuit(n, tuple(gates))


def qaoa_bindings(depth: int, position) -> dict[str, float]:
    """Map a parameter vector (gamma_1..gamma_p, beta_1..beta_p) to slot values.

    The beta components are doubled here so the rx mixer realizes RX(2*beta).
    """
    position = np.asarray(position, dtype=np.float64)
    if position.shape != (2 * depth,):
        raise ValueError(f"expected {2 * depth} parameters, got shape {position.shape}")
    bindings: dict[str, float] = {}
    for k in range(1, depth + 1):
        bindings[gamma_slot(k)] = float(position[k - 1])
        bindings[beta_slot(k)] = 2.0 * float(position[depth + k - 1])
    return bindings
