"""Information-criterion model selection on sampled dynamical systems."""
__version__ = "0.1.0"
