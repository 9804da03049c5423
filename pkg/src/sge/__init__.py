"""Symbolic graph embedding.

Sample order-aware random walks around every node, mine frequent tuple
patterns from the resulting node documents, and use pattern presence as
sparse, human-readable node features.
"""
from .errors import ParseError, SGEError, ValidationError
from .graph import Graph, LabelSet, load_graph
from .sampler import BACKEND, SamplerConfig, generate_sampling_vector, sample_all

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Graph",
    "LabelSet",
    "ParseError",
    "SGEError",
    "SamplerConfig",
    "ValidationError",
    "generate_sampling_vector",
    "load_graph",
    "sample_all",
    "__version__",
]
