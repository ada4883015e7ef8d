"""pinchlab: a numerical laboratory for cocycles of circle maps over shifts."""

__version__ = "0.1.0"
