"""Gate-level circuits, a dense statevector simulator, and DST circuit builders.

Qubit ``q`` is bit ``q`` of a basis-state index. A register of ``n`` qubits
starting at ``start`` holds one focal set: qubit ``start + k`` is the
membership bit of frame element ``k``.

All gates used here (X, RY, controlled RY, multi-controlled X) have real
matrices, so amplitudes are kept as float64.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dst import Frame, MassFunction, PossMF
from .rules import AndStage, LoweredPlan, NotStage

DEFAULT_MAX_QUBITS = 26
NORM_TOL = 1e-9

X, RY, CRY, MCX = "X", "RY", "CRY", "MCX"


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One gate. ``controls`` holds ``(qubit, positive)`` pairs.

    X and RY take no controls; CRY is an RY conditioned on one or more
    controls; MCX is an X conditioned on one or more controls. A negative
    control triggers on ``|0>``.
    """

    kind: str
    target: int
    controls: tuple[tuple[int, bool], ...] = ()
    angle: float = 0.0

    def __post_init__(self):
        if self.kind not in (X, RY, CRY, MCX):
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        if self.kind in (X, RY) and self.controls:
            raise CircuitError(f"{self.kind} takes no controls")
        if self.kind in (CRY, MCX) and not self.controls:
            raise CircuitError(f"{self.kind} needs at least one control")
        qubits = self.qubits
        if len(set(qubits)) != len(qubits) or min(qubits) < 0:
            raise CircuitError(f"gate qubits must be distinct and non-negative: {qubits}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + (self.target,)

    def shifted(self, offset: int) -> "Gate":
        return Gate(
            self.kind,
            self.target + offset,
            tuple((q + offset, pos) for q, pos in self.controls),
            self.angle,
        )

    def dump(self) -> str:
        parts = [f"{self.kind:<4}"]
        if self.controls:
            parts.append("controls=" + ",".join(f"{q}{'+' if p else '-'}" for q, p in self.controls))
        parts.append(f"target={self.target}")
        if self.kind in (RY, CRY):
            parts.append(f"angle={self.angle:.6f}")
        return " ".join(parts)


def _half_angle(angle: float) -> tuple[float, float]:
    # exact at 0 and pi so deterministic qubits carry no rounding residue
    if angle == 0.0:
        return 1.0, 0.0
    if angle == math.pi:
        return 0.0, 1.0
    return math.cos(angle / 2), math.sin(angle / 2)


def ry_matrix(angle: float) -> np.ndarray:
    c, s = _half_angle(angle)
    return np.array([[c, s], [-s, c]])


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()
    output: range = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        out = range(self.width) if self.output is None else self.output
        object.__setattr__(self, "output", out)
        if self.width < 1:
            raise CircuitError("circuit width must be positive")
        for g in self.gates:
            if max(g.qubits) >= self.width:
                raise CircuitError(f"gate {g.dump()} outside a circuit of width {self.width}")
        if out.step != 1 or len(out) == 0 or out.start < 0 or out.stop > self.width:
            raise CircuitError(f"output register {out} invalid for width {self.width}")

    def then(self, gates: Sequence[Gate], output: range | None = None) -> "Circuit":
        return Circuit(self.width, self.gates + tuple(gates), self.output if output is None else output)

    def dump(self) -> str:
        return "\n".join(g.dump() for g in self.gates)


def place(fragments: Sequence[Circuit], extra: int = 0) -> Circuit:
    """Stack circuits side by side, each on its own block of qubits."""
    gates: list[Gate] = []
    offset = 0
    for frag in fragments:
        gates.extend(g.shifted(offset) for g in frag.gates)
        offset += frag.width
    return Circuit(offset + extra, gates)


# -- simulation ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateVector:
    width: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.width,):
            raise CircuitError("amplitude vector length must be 2**width")
        norm = float(np.dot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise CircuitError(f"state norm {norm!r} differs from 1")

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _apply(psi: np.ndarray, width: int, gate: Gate) -> None:
    # psi has shape (2,)*width with axis 0 the highest qubit
    idx: list = [slice(None)] * width
    for q, positive in gate.controls:
        idx[width - 1 - q] = 1 if positive else 0
    t = width - 1 - gate.target
    i0, i1 = list(idx), list(idx)
    i0[t], i1[t] = 0, 1
    i0, i1 = tuple(i0), tuple(i1)
    a0 = psi[i0].copy()
    if gate.kind in (X, MCX):
        psi[i0] = psi[i1]
        psi[i1] = a0
    else:
        c, s = _half_angle(gate.angle)
        a1 = psi[i1]
        psi[i0] = c * a0 + s * a1
        psi[i1] = -s * a0 + c * psi[i1]


def simulate(circuit: Circuit, max_qubits: int = DEFAULT_MAX_QUBITS) -> StateVector:
    """Apply the gates in order to ``|0...0>`` and return the final state."""
    if circuit.width > max_qubits:
        raise CircuitError(
            f"circuit needs {circuit.width} qubits; the dense simulator is capped at {max_qubits}"
        )
    psi = np.zeros((2,) * circuit.width)
    psi[(0,) * circuit.width] = 1.0
    for gate in circuit.gates:
        _apply(psi, circuit.width, gate)
    return StateVector(circuit.width, psi.reshape(-1))


def marginal(state: StateVector, register: range) -> np.ndarray:
    """Distribution of the register's value, bit ``k`` taken from qubit ``start + k``."""
    if register.start < 0 or register.stop > state.width or register.step != 1:
        raise CircuitError(f"register {register} outside width {state.width}")
    w = state.width
    probs = state.probabilities.reshape((2,) * w)
    # axes of the register's qubits, highest qubit first to match index bit order
    keep = [w - 1 - q for q in reversed(register)]
    drop = tuple(a for a in range(w) if a not in keep)
    reduced = probs.sum(axis=drop) if drop else probs
    # remaining axes keep their relative order, which is already highest-first
    return reduced.reshape(-1)


def output_distribution(circuit: Circuit, **kw) -> np.ndarray:
    return marginal(simulate(circuit, **kw), circuit.output)


def output_mass(circuit: Circuit, frame: Frame, **kw) -> MassFunction:
    if len(circuit.output) != frame.n:
        raise CircuitError(f"output register has {len(circuit.output)} qubits, frame has {frame.n}")
    return MassFunction(frame, output_distribution(circuit, **kw))


# -- state preparation ---------------------------------------------------------


def _angle(p0: float, p1: float) -> float:
    """RY angle taking |0> to a state with P(|1>) = p1 / (p0 + p1)."""
    if p1 <= 0:
        return 0.0
    if p0 <= 0:
        return math.pi
    return 2.0 * math.atan(math.sqrt(p1 / p0))


def prepare_simple(poss: PossMF) -> Circuit:
    """One RY per element so that qubit ``k`` reads 1 with probability ``support[k]``.

    The resulting product state measures to the CD-BFT mass of ``poss``.
    """
    gates = [Gate(RY, k, angle=_angle(p0, p1)) for k, (p0, p1) in
             enumerate(zip(poss.non_support, poss.support))]
    return Circuit(poss.frame.n, gates)


def prepare_tree(m: MassFunction) -> Circuit:
    """Layered controlled-RY preparation of an arbitrary mass function.

    Layer ``k`` rotates qubit ``k`` once for every value pattern of qubits
    ``0..k-1``, splitting the mass of that prefix between the two values of
    bit ``k``.
    """
    n = m.frame.n
    vals = m.values
    gates: list[Gate] = []
    for k in range(n):
        # mass grouped by (bit k, lower bits), summed over higher bits
        block = vals.reshape(-1, 2, 1 << k).sum(axis=0)
        for prefix in range(1 << k):
            angle = _angle(block[0, prefix], block[1, prefix])
            if k == 0:
                gates.append(Gate(RY, 0, angle=angle))
            else:
                controls = tuple((q, bool(prefix >> q & 1)) for q in range(k))
                gates.append(Gate(CRY, k, controls, angle))
    return Circuit(n, gates)


# -- compilation ---------------------------------------------------------------


def compile_negation(n: int) -> Circuit:
    """X on every qubit of an ``n``-qubit register."""
    if n < 1:
        raise CircuitError("negation needs at least one qubit")
    return Circuit(n, [Gate(X, k) for k in range(n)])


def compile_plan(plan: LoweredPlan, n: int) -> Circuit:
    """Gates realizing a lowered rule on registers of ``n`` qubits each.

    Register ``r`` occupies qubits ``r*n .. r*n+n-1``; the source masses are
    expected on the first ``len(plan.inputs)`` registers. Each AND stage
    writes element ``k`` of its output register with one multi-controlled X
    whose controls are element ``k`` of each input register. A register
    repeated with the same polarity is one control; repeated with both
    polarities, the stage emits nothing and its output stays at zero.
    """
    gates: list[Gate] = []
    for stage in plan.stages:
        if isinstance(stage, AndStage):
            inputs = dict(stage.inputs)
            if len(inputs) < len(set(stage.inputs)):
                # a register required both set and clear: the AND is constant 0
                continue
            for k in range(n):
                controls = tuple((r * n + k, pos) for r, pos in inputs.items())
                gates.append(Gate(MCX, stage.output * n + k, controls))
        elif isinstance(stage, NotStage):
            gates.extend(Gate(X, stage.register * n + k) for k in range(n))
        else:  # pragma: no cover
            raise AssertionError(f"unknown stage {stage!r}")
    start = plan.output * n
    return Circuit(plan.register_count * n, gates, range(start, start + n))


def build_rule_circuit(plan: LoweredPlan, preparations: Sequence[Circuit]) -> Circuit:
    """Prepare each source register, then apply the compiled plan."""
    if len(preparations) != len(plan.inputs):
        raise CircuitError(f"plan has {len(plan.inputs)} inputs, got {len(preparations)} preparations")
    widths = {c.width for c in preparations}
    if len(widths) != 1:
        raise CircuitError(f"preparations differ in width: {sorted(widths)}")
    n = widths.pop()
    fusion = compile_plan(plan, n)
    prep = place(preparations, extra=fusion.width - n * len(preparations))
    return Circuit(fusion.width, prep.gates + fusion.gates, fusion.output)


def rule_circuit(rule, masses: dict[str, MassFunction]) -> Circuit:
    """Tree-prepared circuit for combining named masses under ``rule``."""
    from .rules import lower

    plan = lower(rule)
    return build_rule_circuit(plan, [prepare_tree(masses[name]) for name in plan.inputs])


def classifier_circuit(evidence: Sequence[PossMF]) -> Circuit:
    """Simple-structure preparation of each attribute, fused by the conjunctive rule."""
    from .rules import And, Var, lower

    names = [f"m{j + 1}" for j in range(len(evidence))]
    if len(names) == 1:
        plan = lower(Var(names[0]))
    else:
        plan = lower(And(tuple(Var(v) for v in names)))
    return build_rule_circuit(plan, [prepare_simple(p) for p in evidence])


# -- measurement and accounting ------------------------------------------------


@dataclass(frozen=True, eq=False)
class ShotCounts:
    counts: np.ndarray
    shots: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots

    def to_mass(self, frame: Frame) -> MassFunction:
        return MassFunction(frame, self.frequencies)


def sample(probs, shots: int, seed=None) -> ShotCounts:
    """Multinomial measurement record; ``seed`` is anything ``default_rng`` accepts."""
    probs = np.asarray(probs, dtype=float)
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must be non-negative and sum to 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs / probs.sum())
    return ShotCounts(counts, shots)


@dataclass(frozen=True)
class Resources:
    width: int
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __getitem__(self, kind: str) -> int:
        return self.counts.get(kind, 0)

    def as_dict(self) -> dict:
        return {"width": self.width, "gates": dict(self.counts), "total": self.total}


def resources(circuit: Circuit) -> Resources:
    tally = Counter(g.kind for g in circuit.gates)
    return Resources(circuit.width, {k: tally[k] for k in (X, RY, CRY, MCX) if tally[k]})
