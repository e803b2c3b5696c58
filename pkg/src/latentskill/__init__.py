"""Hierarchical latent-skill control at desk scale.

A planar articulated agent learns a library of atomic motions by adversarial
imitation, then per-instruction policies compose those motions to maximize
an image/text embedding similarity reward. See README.md for the tour.
"""

__version__ = "0.1.0"

from .kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
