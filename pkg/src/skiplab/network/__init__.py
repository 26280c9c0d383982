from .config import SkipNetConfig
from .skipnet import GateTrace, SkipNet, residual_block, shortcut_path

__all__ = ["SkipNetConfig", "SkipNet", "GateTrace", "residual_block", "shortcut_path"]
