"""Train the evidential classifier on half of Iris and classify the rest.

Per attribute, one Gaussian mixture per class turns a measurement into
support degrees; each becomes a product state of RY rotations, and one
multi-controlled X per class fuses all attributes conjunctively.
"""

import numpy as np

from qdst.classifier import classify, classify_classical, load_iris, split_indices, train
from qdst import circuit as qc

data = load_iris()
train_idx, test_idx = split_indices(data.y, 0.5, np.random.default_rng(1))
model = train(data.X[train_idx], data.y[train_idx], 3, frame=data.classes,
              attributes=data.attributes)

x = data.X[test_idx[30]]
pred = classify(model, x)
print("sample:", dict(zip(data.attributes, x.tolist())), "true class:", data.y[test_idx[30]])
for attr, poss in zip(data.attributes, model.evidence(x)):
    print(f"  {attr:<13} support {np.round(poss.support, 4)}")
fused = {"{" + ",".join(sorted(k)) + "}": round(v, 4) for k, v in pred.mass.focal_sets().items() if v > 1e-4}
print("fused mass:", fused)
print("pignistic:", np.round(pred.pignistic.probs, 4), "->", pred.label)

circuit = qc.classifier_circuit(model.evidence(x))
print("circuit resources:", qc.resources(circuit).as_dict())

correct = agree = 0
for i in test_idx:
    q = classify(model, data.X[i])
    correct += q.label == data.y[i]
    agree += q.index == classify_classical(model, data.X[i]).index
print(f"test accuracy {correct / len(test_idx):.3f}; circuit agrees with enumeration "
      f"on {agree}/{len(test_idx)} samples")
