"""Newman-Penrose formalism on Riemannian 3-manifolds."""

__version__ = "0.1.0"
