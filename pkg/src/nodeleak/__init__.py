"""Recover a deleted node's neighborhood from stale network embeddings.

A social graph loses one node (and every incident edge), and the node's
vector is dropped from a previously trained embedding of the full graph.
This package measures how much of the deleted node's link structure is
still recoverable from the surviving vectors: it retrains an embedding on
the reduced graph, compares pairwise cosine distances before and after the
deletion, and classifies per-node distance-change histograms with training
data generated from additional simulated deletions.
"""

__version__ = "0.1.0"
