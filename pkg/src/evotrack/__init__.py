"""Incremental event evolution tracking over timestamped post streams."""

from .config import EngineConfig
from .engine import Engine, StreamRunner
from .ingest import Post, RawRecord, extract_entities, parse_post
from .postnet import PostNetwork, WindowConfig, WindowDelta
from .similarity import DecayKind, SimilarityParams, fading_similarity, jaccard
from .sketch import NodeType, SketchGraph, classify_node, post_weight, rebuild_sketch
from .track import ClusterTracker, EvolutionOp, classify_event

__version__ = "0.1.0"

__all__ = [
    "EngineConfig",
    "Engine",
    "StreamRunner",
    "Post",
    "RawRecord",
    "extract_entities",
    "parse_post",
    "PostNetwork",
    "WindowConfig",
    "WindowDelta",
    "DecayKind",
    "SimilarityParams",
    "jaccard",
    "fading_similarity",
    "NodeType",
    "SketchGraph",
    "classify_node",
    "post_weight",
    "rebuild_sketch",
    "ClusterTracker",
    "EvolutionOp",
    "classify_event",
    "__version__",
]
