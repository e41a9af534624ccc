"""How a rule turns into register stages and gates.

OR has no direct gate: it becomes an AND over complemented inputs (negative
control polarities) whose result is complemented with X gates.
"""

from qdst import MassFunction, Frame, lower, negate
from qdst import circuit as qc

for rule in ["m1 | m2", "m1 ^ m2", "(~(m1 & m2)) & (m2 | m3)"]:
    plan = lower(rule)
    print(f"{rule}")
    for stage in plan.stages:
        print(f"  {stage}")
    compiled = qc.compile_plan(plan, 2)
    print("  gates on a two-element frame:")
    for line in compiled.dump().splitlines():
        print(f"    {line}")
    print(f"  resources: {qc.resources(compiled).as_dict()}\n")

# negation is one X per element: every focal set maps to its complement
m = MassFunction.from_dict(Frame(["a", "b", "c"]), {("a",): 0.6, ("b", "c"): 0.3, (): 0.1})
circ = qc.prepare_tree(m).then(qc.compile_negation(3).gates)
dist = qc.output_distribution(circ)
print("negated on the circuit:", {i: round(float(p), 3) for i, p in enumerate(dist) if p > 0})
print("negated classically:  ", {i: round(float(p), 3) for i, p in enumerate(negate(m).values) if p > 0})
