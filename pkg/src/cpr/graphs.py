"""Bipartite token graph construction, spectral co-clustering, and explanation selection.

The dependency weights become a weighted bipartite graph (input tokens on the
left, predicted-output tokens on the right). Co-clustering follows the
bipartite spectral recipe: normalize the adjacency as
A_n = D1^{-1/2} A D2^{-1/2}, take singular vectors 2..l+1 with
l = ceil(log2 k), stack Z = [D1^{-1/2} U ; D2^{-1/2} V], and k-means the rows
of Z. The explanation keeps the K densest clusters that span both sides.

Rendering: buggy-code nodes are green, comment nodes yellow, repaired-code
nodes blue; edges gray with width scaled by weight.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .causal import DependencyMatrix
from .errors import InvalidConfigError, InvalidKError
from .tokens import Stream

ROLE_BUGGY = "buggy_code"
ROLE_COMMENT = "comment"
ROLE_REPAIRED = "repaired_code"

ROLE_COLORS = {ROLE_BUGGY: "green", ROLE_COMMENT: "yellow", ROLE_REPAIRED: "blue"}


@dataclass(frozen=True)
class GraphNode:
    text: str
    role: str
    index: int  # column/row index in the dependency matrix


@dataclass(frozen=True)
class BipartiteGraph:
    left: tuple[GraphNode, ...]
    right: tuple[GraphNode, ...]
    edges: tuple[tuple[int, int, float], ...]  # (left idx, right idx, weight > 0)
    empty_warning: bool = False

    @property
    def node_count(self) -> int:
        return len(self.left) + len(self.right)

    def max_weight(self) -> float:
        return max((w for _, _, w in self.edges), default=0.0)


@dataclass(frozen=True)
class CoClustering:
    k: int
    row_assign: tuple[int, ...]
    col_assign: tuple[int, ...]


@dataclass(frozen=True)
class ExplanationGraph:
    nodes: tuple[tuple[str, str, int], ...]  # (text, role, cluster id)
    edges: tuple[tuple[int, int, float], ...]  # indices into nodes
    selected_clusters: tuple[tuple[int, float], ...]  # (cluster id, density score)
    empty_warning: bool = False

    def to_json_dict(self) -> dict:
        return {
            "nodes": [{"text": t, "role": r, "cluster": c} for t, r, c in self.nodes],
            "edges": [{"source": a, "target": b, "weight": w} for a, b, w in self.edges],
            "selected_clusters": [
                {"cluster": c, "score": s} for c, s in self.selected_clusters
            ],
            "empty_warning": self.empty_warning,
        }


def build_bipartite(dep: DependencyMatrix, tau: float = 0.75) -> BipartiteGraph:
    """Threshold positive weights at their tau-quantile and drop isolated nodes."""
    if not 0.0 <= tau < 1.0:
        raise InvalidConfigError(f"tau must be in [0,1), got {tau}")
    W = np.clip(dep.W, 0.0, None)
    positive = W[W > 0]
    if positive.size == 0:
        return BipartiteGraph(left=(), right=(), edges=(), empty_warning=True)
    cutoff = float(np.quantile(positive, tau))
    rows, cols = np.nonzero(W >= cutoff)
    keep = [(int(i), int(j), float(W[i, j])) for i, j in zip(rows, cols) if W[i, j] > 0]

    left_ids = sorted({i for i, _, _ in keep})
    right_ids = sorted({j for _, j, _ in keep})
    left_pos = {i: p for p, i in enumerate(left_ids)}
    right_pos = {j: p for p, j in enumerate(right_ids)}
    left = tuple(
        GraphNode(
            text=dep.input_vocab[i],
            role=ROLE_BUGGY if dep.input_streams[i] == Stream.CODE.value else ROLE_COMMENT,
            index=i,
        )
        for i in left_ids
    )
    right = tuple(GraphNode(text=dep.output_vocab[j], role=ROLE_REPAIRED, index=j) for j in right_ids)
    edges = tuple((left_pos[i], right_pos[j], w) for i, j, w in keep)
    return BipartiteGraph(left=left, right=right, edges=edges)


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300, trace: list | None = None) -> list[int]:
    """Deterministic k-means++ initialization followed by Lloyd iterations.

    When `trace` is given, the within-cluster sum of squares after each
    assignment step is appended to it.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    if k > n:
        raise InvalidKError(f"k={k} exceeds {n} points")
    if k < 1:
        raise InvalidKError(f"k must be >= 1, got {k}")
    rng = np.random.default_rng(seed)

    centers = np.empty((k, pts.shape[1]))
    first = int(rng.integers(n))
    centers[0] = pts[first]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # All remaining points coincide with a chosen center; spread over
            # the unchosen ones deterministically.
            chosen = {tuple(x) for x in centers[:c]}
            fresh = next((i for i in range(n) if tuple(pts[i]) not in chosen), int(rng.integers(n)))
            centers[c] = pts[fresh]
        else:
            r = float(rng.random()) * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            centers[c] = pts[min(idx, n - 1)]
        d2 = np.minimum(d2, np.sum((pts - centers[c]) ** 2, axis=1))

    assign = np.full(n, -1, dtype=int)
    for _ in range(max_iter):
        dists = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(dists, axis=1)
        for c in range(k):
            if not np.any(new_assign == c):
                # Refill an empty cluster with the point farthest from its centroid.
                far = int(np.argmax(dists[np.arange(n), new_assign]))
                new_assign[far] = c
        if trace is not None:
            trace.append(wcss(pts, new_assign))
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(k):
            members = pts[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return [int(a) for a in assign]


def wcss(points, assign) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    assign = np.asarray(assign)
    total = 0.0
    for c in np.unique(assign):
        members = pts[assign == c]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def normalized_adjacency(g: BipartiteGraph):
    """A_n = D1^{-1/2} A D2^{-1/2} plus the degree scalings."""
    A = np.zeros((len(g.left), len(g.right)))
    for i, j, w in g.edges:
        A[i, j] += w
    d1 = A.sum(axis=1)
    d2 = A.sum(axis=0)
    s1 = 1.0 / np.sqrt(d1)
    s2 = 1.0 / np.sqrt(d2)
    return s1[:, None] * A * s2[None, :], s1, s2


def spectral_coclusters(g: BipartiteGraph, k: int, seed: int = 0, restarts: int = 8) -> CoClustering:
    """Joint clustering of both node sets via singular vectors of A_n."""
    if g.node_count == 0:
        raise InvalidKError("cannot cluster an empty graph")
    if k > g.node_count:
        raise InvalidKError(f"k={k} exceeds {g.node_count} nodes")
    if k < 1:
        raise InvalidKError(f"k must be >= 1, got {k}")
    if k == 1:
        return CoClustering(k=1, row_assign=(0,) * len(g.left), col_assign=(0,) * len(g.right))

    An, s1, s2 = normalized_adjacency(g)
    U, sigma, Vt = np.linalg.svd(An, full_matrices=False)
    levels = math.ceil(math.log2(k))
    hi = min(levels + 1, len(sigma))
    idx = list(range(1, hi)) or [0]
    Z = np.vstack([s1[:, None] * U[:, idx], s2[:, None] * Vt.T[:, idx]])

    best = None
    for r in range(restarts):
        assign = kmeans(Z, k, seed=seed * 1000 + r)
        score = wcss(Z, assign)
        if best is None or score < best[0] - 1e-12:
            best = (score, assign)
    assign = best[1]
    nl = len(g.left)
    return CoClustering(k=k, row_assign=tuple(assign[:nl]), col_assign=tuple(assign[nl:]))


def default_cluster_count(g: BipartiteGraph, cap: int = 8) -> int:
    smaller = min(len(g.left), len(g.right))
    if smaller <= 0:
        return 1
    return max(1, min(cap, math.ceil(math.sqrt(smaller)), g.node_count))


def cluster_density(cc: CoClustering, g: BipartiteGraph) -> dict[int, float]:
    """Intra-cluster edge weight normalized by |left(c)| * |right(c)|."""
    left_of: dict[int, int] = {}
    right_of: dict[int, int] = {}
    for c in cc.row_assign:
        left_of[c] = left_of.get(c, 0) + 1
    for c in cc.col_assign:
        right_of[c] = right_of.get(c, 0) + 1
    weight: dict[int, float] = {}
    for i, j, w in g.edges:
        if cc.row_assign[i] == cc.col_assign[j]:
            weight[cc.row_assign[i]] = weight.get(cc.row_assign[i], 0.0) + w
    return {
        c: weight.get(c, 0.0) / (left_of[c] * right_of[c])
        for c in range(cc.k)
        if left_of.get(c) and right_of.get(c)
    }


def select_explanation(cc: CoClustering, g: BipartiteGraph, K: int = 3) -> ExplanationGraph:
    """Keep the K densest clusters covering both sides; renumber by density."""
    if K < 1:
        raise InvalidKError(f"K must be >= 1, got {K}")
    density = cluster_density(cc, g)
    if not density:
        return ExplanationGraph(nodes=(), edges=(), selected_clusters=(), empty_warning=True)
    ranked = sorted(density.items(), key=lambda item: (-item[1], item[0]))[:K]
    new_id = {c: rank for rank, (c, _) in enumerate(ranked)}

    nodes: list[tuple[str, str, int]] = []
    node_pos: dict[tuple[str, int], int] = {}
    for side, assign in (("L", cc.row_assign), ("R", cc.col_assign)):
        members = g.left if side == "L" else g.right
        for local, c in enumerate(assign):
            if c in new_id:
                node_pos[(side, local)] = len(nodes)
                nodes.append((members[local].text, members[local].role, new_id[c]))
    edges = tuple(
        (node_pos[("L", i)], node_pos[("R", j)], w)
        for i, j, w in g.edges
        if cc.row_assign[i] == cc.col_assign[j] and cc.row_assign[i] in new_id
    )
    selected = tuple((new_id[c], score) for c, score in ranked)
    return ExplanationGraph(nodes=tuple(nodes), edges=edges, selected_clusters=selected)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def explanation_to_dot(graph: ExplanationGraph) -> str:
    lines = ["graph explanation {", "  node [style=filled];"]
    max_w = max((w for _, _, w in graph.edges), default=0.0)
    clusters: dict[int, list[int]] = {}
    for idx, (_, _, c) in enumerate(graph.nodes):
        clusters.setdefault(c, []).append(idx)
    for c in sorted(clusters):
        lines.append(f"  subgraph cluster_{c} {{")
        lines.append(f'    label="cluster {c}";')
        for idx in clusters[c]:
            text, role, _ = graph.nodes[idx]
            lines.append(
                f'    n{idx} [label="{_dot_escape(text)}", fillcolor={ROLE_COLORS[role]}];'
            )
        lines.append("  }")
    for a, b, w in graph.edges:
        width = 1.0 + 4.0 * (w / max_w) if max_w > 0 else 1.0
        lines.append(f"  n{a} -- n{b} [color=gray, penwidth={width:.3f}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def bipartite_to_dot(g: BipartiteGraph) -> str:
    """Pre-selection rendering: all thresholded dependencies, no cluster boxes."""
    lines = ["graph dependencies {", "  node [style=filled];"]
    max_w = g.max_weight()
    for p, node in enumerate(g.left):
        lines.append(f'  l{p} [label="{_dot_escape(node.text)}", fillcolor={ROLE_COLORS[node.role]}];')
    for p, node in enumerate(g.right):
        lines.append(f'  r{p} [label="{_dot_escape(node.text)}", fillcolor={ROLE_COLORS[node.role]}];')
    for i, j, w in g.edges:
        width = 1.0 + 4.0 * (w / max_w) if max_w > 0 else 1.0
        lines.append(f"  l{i} -- r{j} [color=gray, penwidth={width:.3f}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def bipartite_to_json_dict(g: BipartiteGraph) -> dict:
    return {
        "left": [{"text": n.text, "role": n.role} for n in g.left],
        "right": [{"text": n.text, "role": n.role} for n in g.right],
        "edges": [{"source": i, "target": j, "weight": w} for i, j, w in g.edges],
        "empty_warning": g.empty_warning,
    }


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
