"""Directed graph read off the support of a VAR coefficient tensor."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .core import ValidationError, VarCoefficients

DEFAULT_THRESHOLD = 0.05
EDGE_HEADER = "source,destination,strength"


class Edge(NamedTuple):
    source: int
    destination: int
    strength: float


@dataclass(frozen=True)
class EdgeList:
    """Edges j -> i (source j influences destination i), sorted source-major."""

    edges: tuple[Edge, ...]
    n_nodes: int

    def __post_init__(self):
        edges = tuple(sorted(Edge(int(s), int(d), float(w)) for s, d, w in self.edges))
        for e in edges:
            if not (0 <= e.source < self.n_nodes and 0 <= e.destination < self.n_nodes):
                raise ValidationError(f"edge {e} references a node outside 0..{self.n_nodes - 1}")
            if e.strength < 0:
                raise ValidationError(f"edge {e} has negative strength")
        object.__setattr__(self, "edges", edges)

    def pairs(self) -> set[tuple[int, int]]:
        return {(e.source, e.destination) for e in self.edges}

    def __len__(self):
        return len(self.edges)


def extract_topology(var: VarCoefficients, threshold: float = DEFAULT_THRESHOLD) -> EdgeList:
    """Keep j -> i when max_p |a[p, i, j]| exceeds ``threshold``.

    The latent space is only identified up to a per-node reparameterisation,
    so strengths from different fits are not directly comparable; the zero
    pattern is the meaningful part.
    """
    if threshold < 0:
        raise ValidationError("threshold must be >= 0")
    a = var.entries if isinstance(var, VarCoefficients) else np.asarray(var)
    strength = np.abs(a).max(axis=0)  # [i, j]
    dst, src = np.nonzero(strength > threshold)
    return EdgeList(tuple(Edge(j, i, strength[i, j]) for i, j in zip(dst, src)), a.shape[1])


def compare_topology(estimated: EdgeList, truth: EdgeList) -> tuple[float, float]:
    """(precision, recall) over directed edges, ignoring strengths."""
    if estimated.n_nodes != truth.n_nodes:
        raise ValidationError("edge lists refer to different numbers of nodes")
    est, ref = estimated.pairs(), truth.pairs()
    hits = len(est & ref)
    if not est:
        precision = 1.0 if not ref else 0.0
    else:
        precision = hits / len(est)
    recall = hits / len(ref) if ref else 1.0
    return precision, recall


def format_edges(edges: EdgeList) -> str:
    buf = io.StringIO()
    buf.write(EDGE_HEADER + "\n")
    for e in edges.edges:
        buf.write(f"{e.source},{e.destination},{e.strength!r}\n")
    return buf.getvalue()


def write_edges(path: str | Path, edges: EdgeList) -> None:
    Path(path).write_text(format_edges(edges))


def read_edges(path: str | Path, n_nodes: int) -> EdgeList:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != EDGE_HEADER:
        raise ValidationError(f"{path}: expected header {EDGE_HEADER!r}")
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            s, d, w = line.split(",")
            edges.append(Edge(int(s), int(d), float(w)))
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: malformed edge line {line!r}") from exc
    return EdgeList(tuple(edges), n_nodes)
