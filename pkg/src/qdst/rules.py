"""Set-theoretic combination rules: parsing, Boolean semantics, lowering.

Grammar (``~`` binds tightest, then ``&``, then ``|`` and ``^`` which share a
level and associate left)::

    expr   := term (("|" | "^") term)*
    term   := factor ("&" factor)*
    factor := "~" factor | "(" expr ")" | identifier

A rule is read per element of the frame: each variable stands for the
membership bit of that element in the focal set drawn from the named source,
and the rule's value is the membership bit in the combined focal set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import reduce
from typing import Mapping, Sequence, Union


class RuleSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundVariableError(KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"rule variable {self.name!r} is not bound to a mass function"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    child: "Expr"


@dataclass(frozen=True)
class And:
    children: tuple["Expr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("And needs at least two operands")


@dataclass(frozen=True)
class Or:
    children: tuple["Expr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("Or needs at least two operands")


@dataclass(frozen=True)
class Xor:
    left: "Expr"
    right: "Expr"


Expr = Union[Var, Not, And, Or, Xor]

_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[~&|^()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        match = _TOKEN.match(text, pos)
        if not match:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise RuleSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = "ident" if match.group("ident") else "op"
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expr(self) -> Expr:
        node = self.term()
        ors: list[Expr] = []
        while self.peek()[1] in ("|", "^"):
            op = self.take()[1]
            rhs = self.term()
            if op == "|":
                ors = ors or [node]
                ors.append(rhs)
                node = Or(tuple(ors))
            else:
                ors = []
                node = Xor(node, rhs)
        return node

    def term(self) -> Expr:
        factors = [self.factor()]
        while self.peek()[1] == "&":
            self.take()
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else And(tuple(factors))

    def factor(self) -> Expr:
        kind, value, pos = self.take()
        if value == "~":
            return Not(self.factor())
        if value == "(":
            node = self.expr()
            kind, value, pos = self.take()
            if value != ")":
                raise RuleSyntaxError("expected ')'", pos)
            return node
        if kind == "ident":
            return Var(value)
        what = "end of input" if kind == "end" else repr(value)
        raise RuleSyntaxError(f"unexpected {what}", pos)


def parse(text: str) -> Expr:
    """Parse rule text such as ``"(~(m1 & m2)) & (m2 | m3)"``."""
    if not text.strip():
        raise RuleSyntaxError("empty rule", 0)
    parser = _Parser(text)
    node = parser.expr()
    kind, value, pos = parser.peek()
    if kind != "end":
        raise RuleSyntaxError(f"unexpected {value!r}", pos)
    return node


def pretty(node: Expr) -> str:
    """Canonical text; ``parse(pretty(e)) == e``."""
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Not):
        inner = pretty(node.child)
        return "~" + (inner if isinstance(node.child, (Var, Not)) else f"({inner})")
    if isinstance(node, And):
        return " & ".join(
            pretty(c) if isinstance(c, (Var, Not)) else f"({pretty(c)})" for c in node.children
        )
    if isinstance(node, Or):
        return " | ".join(
            pretty(c) if isinstance(c, (Var, Not, And)) else f"({pretty(c)})"
            for c in node.children
        )
    left = pretty(node.left) if isinstance(node.left, (Var, Not, And, Xor)) else f"({pretty(node.left)})"
    right = pretty(node.right) if isinstance(node.right, (Var, Not, And)) else f"({pretty(node.right)})"
    return f"{left} ^ {right}"


def variables(node: Expr) -> list[str]:
    """Variable names in order of first appearance."""
    seen: dict[str, None] = {}

    def walk(n):
        if isinstance(n, Var):
            seen.setdefault(n.name)
        elif isinstance(n, Not):
            walk(n.child)
        elif isinstance(n, Xor):
            walk(n.left)
            walk(n.right)
        else:
            for c in n.children:
                walk(c)

    walk(node)
    return list(seen)


def expand_xor(node: Expr) -> Expr:
    """Rewrite every ``a ^ b`` as ``(a & ~b) | (~a & b)``."""
    if isinstance(node, Var):
        return node
    if isinstance(node, Not):
        return Not(expand_xor(node.child))
    if isinstance(node, Xor):
        a, b = expand_xor(node.left), expand_xor(node.right)
        return Or((And((a, Not(b))), And((Not(a), b))))
    return type(node)(tuple(expand_xor(c) for c in node.children))


def eval_bool(node: Expr, bits: Mapping[str, int]) -> int:
    """Evaluate the rule on single membership bits."""
    if isinstance(node, Var):
        try:
            return int(bool(bits[node.name]))
        except KeyError:
            raise UnboundVariableError(node.name) from None
    if isinstance(node, Not):
        return 1 - eval_bool(node.child, bits)
    if isinstance(node, And):
        return int(all([eval_bool(c, bits) for c in node.children]))
    if isinstance(node, Or):
        return int(any([eval_bool(c, bits) for c in node.children]))
    a, b = eval_bool(node.left, bits), eval_bool(node.right, bits)
    return (a & (1 - b)) | ((1 - a) & b)


def evaluate_bitwise(node: Expr, indices: Mapping[str, object], n: int):
    """Apply the rule to whole focal-set indices, every element bit at once.

    ``indices`` may hold ints or integer arrays; the result has the
    broadcast shape.
    """
    mask = (1 << n) - 1
    if isinstance(node, Var):
        try:
            return indices[node.name]
        except KeyError:
            raise UnboundVariableError(node.name) from None
    if isinstance(node, Not):
        return mask ^ evaluate_bitwise(node.child, indices, n)
    if isinstance(node, Xor):
        return evaluate_bitwise(node.left, indices, n) ^ evaluate_bitwise(node.right, indices, n)
    parts = [evaluate_bitwise(c, indices, n) for c in node.children]
    return reduce((lambda a, b: a & b) if isinstance(node, And) else (lambda a, b: a | b), parts)


# -- lowering ----------------------------------------------------------------


@dataclass(frozen=True)
class AndStage:
    """Write the AND of polarity-adjusted input registers into a fresh register.

    ``inputs`` holds ``(register, positive)`` pairs; a negative input
    contributes its complement.
    """

    inputs: tuple[tuple[int, bool], ...]
    output: int


@dataclass(frozen=True)
class NotStage:
    """Complement a register in place."""

    register: int


Stage = Union[AndStage, NotStage]


@dataclass(frozen=True)
class LoweredPlan:
    inputs: tuple[str, ...]
    stages: tuple[Stage, ...]
    output: int
    register_count: int = field(default=0)

    def __post_init__(self):
        available = set(range(len(self.inputs)))
        for stage in self.stages:
            if isinstance(stage, AndStage):
                used = [r for r, _ in stage.inputs]
                assert set(used) <= available, f"stage reads unknown register: {stage}"
                assert stage.output not in available, f"register {stage.output} written twice"
                available.add(stage.output)
            else:
                assert stage.register in available, f"NOT on unknown register: {stage}"
        assert self.output in available
        object.__setattr__(self, "register_count", len(available))

    @property
    def and_stages(self) -> list[AndStage]:
        return [s for s in self.stages if isinstance(s, AndStage)]

    def evaluate(self, bits: Mapping[str, int]) -> int:
        """Run the stages on single bits and return the output bit."""
        regs = {}
        for r, name in enumerate(self.inputs):
            try:
                regs[r] = int(bool(bits[name]))
            except KeyError:
                raise UnboundVariableError(name) from None
        for stage in self.stages:
            if isinstance(stage, AndStage):
                regs[stage.output] = int(all(regs[r] == int(pos) for r, pos in stage.inputs))
            else:
                regs[stage.register] ^= 1
        return regs[self.output]


def lower(rule: Expr | str, inputs: Sequence[str] | None = None) -> LoweredPlan:
    """Decompose a rule into AND and NOT register stages.

    XOR is expanded first. OR becomes an AND over complemented inputs whose
    register is then complemented; the complements feeding that AND are
    realized as negative control polarities, never as NOT stages. A negation
    directly on a variable is likewise folded into polarity. A negation of a
    compound subexpression that feeds a plain AND (or is the final result) is
    a NOT stage on its register. ``inputs`` fixes the input register order
    (default: order of first appearance).
    """
    if isinstance(rule, str):
        rule = parse(rule)
    names = list(inputs) if inputs is not None else variables(rule)
    missing = [v for v in variables(rule) if v not in names]
    if missing:
        raise UnboundVariableError(missing[0])
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate input names {names}")
    register = {name: r for r, name in enumerate(names)}
    stages: list[Stage] = []
    next_reg = len(names)

    def operand(node: Expr, negated: bool, absorb: bool) -> tuple[int, bool]:
        # returns (register, positive); absorb: a complement may stay a polarity
        nonlocal next_reg
        if isinstance(node, Var):
            return register[node.name], not negated
        if isinstance(node, Not):
            return operand(node.child, not negated, absorb)
        is_or = isinstance(node, Or)
        ins = tuple(operand(c, is_or, is_or) for c in node.children)
        out = next_reg
        next_reg += 1
        stages.append(AndStage(ins, out))
        # the register holds the AND, or the complement of the OR
        complement = negated != is_or
        if complement and absorb:
            return out, False
        if complement:
            stages.append(NotStage(out))
        return out, True

    out, positive = operand(expand_xor(rule), False, False)
    if not positive:
        stages.append(NotStage(out))
    return LoweredPlan(tuple(names), tuple(stages), out)
