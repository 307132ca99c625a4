#!/usr/bin/env python3
"""Build the learnable text graph and watch one refinement iteration:
edge scores, row-stochastic adjacency, symmetric normalization, and
message passing."""

import numpy as np

from fewgraph.autodiff import constant
from fewgraph.corpus import assemble_matrix, generate_synthetic, sample_episode
from fewgraph.graphnet import EdgeNetwork, build_adjacency, message_pass
from fewgraph.autodiff import parameter
from fewgraph.graphnet import glorot_uniform

rng = np.random.default_rng(0)
corpus = generate_synthetic(2, 8, 4, 3.0, seed=1)
episode = sample_episode(corpus, shots=2, test_fraction=0.25, seed=0, unlabeled_cap=6)

indices = list(episode.labeled) + list(episode.unlabeled)
labels = [corpus.records[i].label for i in episode.labeled] + [None] * len(episode.unlabeled)
x0 = assemble_matrix(corpus.embedding_matrix(indices), labels, corpus.labels.k2)
print(f"episode of {len(indices)} nodes, representation width {x0.shape[1]}")

net = EdgeNetwork(x0.shape[1], hidden=16, rng=rng)
graph = build_adjacency(net, constant(x0))

print("\nedge scores E (symmetric, zero diagonal):")
print(np.round(graph.scores.value, 3))
print("\nadjacency A (each row sums to 1):")
print(np.round(graph.adjacency.value, 3))
print("row sums:", graph.adjacency.value.sum(axis=1))

d = (graph.adjacency.value + np.eye(len(indices))).sum(axis=1)
print("\ndegrees of A + I (always 2 for a row-stochastic A):", d)
print("normalized adjacency:")
print(np.round(graph.normalized.value, 3))

w = parameter(glorot_uniform(rng, x0.shape[1], 5))
x1 = message_pass(graph, w)
print(f"\nafter one message-passing step the representations are {x1.value.shape}")
print(np.round(x1.value, 3))

# The next iteration would rebuild the graph from x1 with a fresh edge
# network matched to the new width - that is exactly what refine() does.
net2 = EdgeNetwork(5, hidden=16, rng=rng)
graph2 = build_adjacency(net2, x1)
print("\nreconstructed adjacency on refined representations:")
print(np.round(graph2.adjacency.value, 3))
