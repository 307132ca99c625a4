#!/usr/bin/env python3
"""Walk through the tape engine: build expressions, run backward, check
gradients against central finite differences."""

import numpy as np

from fewgraph import autodiff as ad

rng = np.random.default_rng(0)

print("== forward values ==")
a = ad.parameter(rng.normal(size=(2, 3)))
b = ad.parameter(rng.normal(size=(3, 2)))
product = ad.matmul(a, b)
print("a @ b =\n", product.value)

probs = ad.row_softmax(product, temperature=3.0)
print("row softmax at temperature 3 (rows sum to 1):\n", probs.value)
print("row sums:", probs.value.sum(axis=1))

# A softened softmax approaches the uniform distribution.
for tau in (1.0, 3.0, 100.0):
    soft = ad.row_softmax(product, tau).value
    print(f"tau={tau:>5}: max deviation from uniform = {np.abs(soft - 0.5).max():.4f}")

print("\n== backward ==")
target = ad.constant(rng.dirichlet(np.ones(2), size=2))
loss = ad.cross_entropy(probs, target)
ad.backward(loss)
print("loss =", loss.value[0, 0])
print("dloss/da =\n", a.grad)

print("\n== gradient check against finite differences ==")
h = 1e-5
fd = np.zeros_like(a.value)
for i in range(a.value.shape[0]):
    for j in range(a.value.shape[1]):
        orig = a.value[i, j]

        def loss_at(v):
            a.value[i, j] = v
            out = ad.cross_entropy(
                ad.row_softmax(ad.matmul(a, b), 3.0), target
            ).value[0, 0]
            a.value[i, j] = orig
            return out

        fd[i, j] = (loss_at(orig + h) - loss_at(orig - h)) / (2 * h)
rel = np.abs(fd - a.grad) / np.maximum(np.abs(fd), 1e-8)
print("max relative error vs finite differences:", rel.max())
