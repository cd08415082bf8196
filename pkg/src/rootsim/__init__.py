"""Simulator and verification harness for consensus over rooted dynamic networks."""

from .graphs import (
    CommGraph,
    GraphError,
    GraphSequence,
    causal_past,
    compound,
    compound_all,
    in_neighborhood,
    is_rooted,
    root_components,
    single_root,
    star,
)

__all__ = [
    "CommGraph",
    "GraphError",
    "GraphSequence",
    "causal_past",
    "compound",
    "compound_all",
    "in_neighborhood",
    "is_rooted",
    "root_components",
    "single_root",
    "star",
]

__version__ = "0.1.0"
