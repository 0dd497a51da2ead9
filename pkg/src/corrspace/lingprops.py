"""Linguistic-property cluster vectors and their cross-language alignment loss.

Cluster vectors are averages over monolingual embeddings and stay frozen; the
alignment trains each language's shared projection weight W plus a dedicated
cluster bias. Clusters match across languages by exact function-id string.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .corpus import EmbeddingTable, LinguisticClusterSet
from .corrnet import ProjectionParams
from .errors import DimensionError


@dataclass
class ClusterVectorSet:
    language: str
    function_ids: list[str]
    matrix: np.ndarray  # (n_clusters, d), row k belongs to function_ids[k]


def build_cluster_vectors(clusters: LinguisticClusterSet, table: EmbeddingTable) -> ClusterVectorSet:
    """Mean of member vectors; pair members contribute (extended - basic)."""
    ids = []
    rows = []
    for cluster in clusters.clusters:
        vecs = []
        for member in cluster.members:
            if cluster.kind == "word":
                vecs.append(table.row(member))
            else:
                basic, extended = member
                vecs.append(table.row(extended) - table.row(basic))
        ids.append(cluster.function_id)
        rows.append(np.mean(vecs, axis=0))
    matrix = np.array(rows) if rows else np.zeros((0, table.dim))
    return ClusterVectorSet(clusters.language, ids, matrix)


def intersect_cluster_sets(set_i: ClusterVectorSet, set_j: ClusterVectorSet):
    """Restrict both sets to their shared function-ids, identically ordered."""
    shared = sorted(set(set_i.function_ids) & set(set_j.function_ids))
    rows_i = [set_i.function_ids.index(f) for f in shared]
    rows_j = [set_j.function_ids.index(f) for f in shared]
    sub_i = ClusterVectorSet(set_i.language, shared, set_i.matrix[rows_i])
    sub_j = ClusterVectorSet(set_j.language, shared, set_j.matrix[rows_j])
    return sub_i, sub_j


def _project(set_: ClusterVectorSet, p: ProjectionParams, bias):
    if set_.matrix.shape[1] != p.dim_in:
        raise DimensionError(
            f"cluster vectors have {set_.matrix.shape[1]} columns, projection expects {p.dim_in}"
        )
    return numerics.sigmoid(set_.matrix @ p.w + bias)


def loss_lingprops(set_i, set_j, p_i: ProjectionParams, p_j: ProjectionParams,
                   bias_i, bias_j) -> float:
    """O_R for one pair; 0.0 when the sets share no function-id."""
    return loss_lingprops_with_grads(set_i, set_j, p_i, p_j, bias_i, bias_j)[0]


def loss_lingprops_with_grads(set_i, set_j, p_i: ProjectionParams, p_j: ProjectionParams,
                              bias_i, bias_j):
    """Returns (loss, grads) with grads keyed i.w, i.b_cluster, j.w, j.b_cluster.

    The intersection happens here; an empty intersection yields zero loss and
    zero gradients (the component is skipped for the pair).
    """
    sub_i, sub_j = intersect_cluster_sets(set_i, set_j)
    grads = {
        "i.w": np.zeros_like(p_i.w),
        "i.b_cluster": np.zeros_like(bias_i),
        "j.w": np.zeros_like(p_j.w),
        "j.b_cluster": np.zeros_like(bias_j),
    }
    if not sub_i.function_ids:
        return 0.0, grads
    h_i = _project(sub_i, p_i, bias_i)
    h_j = _project(sub_j, p_j, bias_j)
    loss, d_h_i, d_h_j = numerics.cosine_row_loss_backward(h_i, h_j)
    for tag, sub, h, d_h in (("i", sub_i, h_i, d_h_i), ("j", sub_j, h_j, d_h_j)):
        d_pre = numerics.sigmoid_backward(d_h, h)
        grads[f"{tag}.w"] += sub.matrix.T @ d_pre
        grads[f"{tag}.b_cluster"] += d_pre.sum(axis=0)
    return loss, grads
