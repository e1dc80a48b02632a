"""Problem setup, run loop, output and command line."""
from .config import PRESETS, SimConfig, load_config, preset
from .problem import build_state, f_background, f_initial, init_bump_on_tail

__all__ = ["PRESETS", "SimConfig", "load_config", "preset",
           "build_state", "f_background", "f_initial", "init_bump_on_tail"]
