"""Balanced political news consumption at desk scale.

Subsystems: corpus handling and synthesis, dual political knowledge graphs
with trainable triple embeddings, a hierarchical-attention stance classifier,
a 2-D opinion map, balanced-feed mechanics, the pre/post study statistics
kernel, and an HTTP gateway binding them for the web UI.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
