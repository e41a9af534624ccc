"""Combine three mass functions under four rules, classically and on circuits.

Each rule is parsed, lowered to AND/NOT register stages and compiled to
multi-controlled X gates. The sources are loaded with tree-structured
rotations and the output register's marginal is the combined mass.
"""

import numpy as np

from qdst import MassFunction, Frame, combine_rule, lower
from qdst import circuit as qc

frame = Frame(["A", "B"])
masses = {
    "m1": MassFunction(frame, [0.1, 0.2, 0.5, 0.2]),
    "m2": MassFunction(frame, [0.05, 0.45, 0.25, 0.25]),
    "m3": MassFunction(frame, [0.3, 0.1, 0.1, 0.5]),
}

rules = {
    "conjunctive": "m1 & m2 & m3",
    "disjunctive": "m1 | m2 | m3",
    "exclusive": "m1 ^ m2",
    "customized": "(~(m1 & m2)) & (m2 | m3)",
}

for name, rule in rules.items():
    plan = lower(rule)
    circuit = qc.build_rule_circuit(plan, [qc.prepare_tree(masses[v]) for v in plan.inputs])
    exact = qc.output_distribution(circuit)
    shots = qc.sample(exact, 1024, seed=0).frequencies
    actual = combine_rule(rule, masses).values
    print(f"{name}: {rule}  ({circuit.width} qubits)")
    for label, s, e, a in zip(["{}", "{A}", "{B}", "{A,B}"], shots, exact, actual):
        print(f"  {label:<6} 1024 shots {s:.4f}   exact {e:.4f}   enumeration {a:.4f}")
    assert np.allclose(exact, actual)
