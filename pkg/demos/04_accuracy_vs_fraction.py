"""Accuracy against training fraction, exact readout versus finite shots.

Prints the data behind an accuracy-versus-fraction curve. Ten repeats keep
it quick; the command line tool runs the full hundred.
"""

from qdst.classifier import Backend, evaluate, load_iris

data = load_iris()
fractions = [0.3, 0.5, 0.7, 0.9]
exact = evaluate(data, fractions, repeats=10)
sampled = evaluate(data, fractions, repeats=10, backend=Backend("shots", 256))

print("fraction  exact            256 shots")
for e, s in zip(exact.summary(), sampled.summary()):
    print(f"{e.fraction:>8.1f}  {e.mean:.3f} ± {e.std:.3f}    {s.mean:.3f} ± {s.std:.3f}")
