"""Greedy agglomerative average-linkage clustering over unit embeddings.

Items are processed in the caller-supplied order (agenda feeds events by
timestamp), so the partition is deterministic and easy to check against a
brute-force oracle on small instances.
"""

from __future__ import annotations

import numpy as np

from .embedding import cosine


def greedy_cluster(embeddings: list[np.ndarray], threshold: float) -> list[list[int]]:
    """Return clusters as lists of item indices, in first-seen order.

    Each item joins the cluster with the highest average similarity to its
    members when that average meets ``threshold`` (inclusive); otherwise it
    starts a new cluster.  Ties go to the earlier-created cluster.
    """
    clusters: list[list[int]] = []
    for i, emb in enumerate(embeddings):
        best_idx = -1
        best_sim = -2.0
        for ci, members in enumerate(clusters):
            avg = sum(cosine(emb, embeddings[j]) for j in members) / len(members)
            if avg > best_sim:
                best_sim = avg
                best_idx = ci
        if best_idx >= 0 and best_sim >= threshold:
            clusters[best_idx].append(i)
        else:
            clusters.append([i])
    return clusters


def centroid(embeddings: list[np.ndarray]) -> np.ndarray:
    mean = np.mean(np.stack(embeddings), axis=0)
    norm = float(np.linalg.norm(mean))
    return mean / norm if norm > 0 else mean
