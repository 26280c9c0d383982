"""skiplab: train and analyze dynamically-routed (layer-skipping) residual networks."""

__version__ = "0.1.0"
