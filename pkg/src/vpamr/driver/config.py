"""Run configuration: defaults, AMR presets and INI-style config files."""
from __future__ import annotations

import ast
import configparser
import io
import math
from dataclasses import asdict, dataclass, fields, replace

PRESETS = {
    "amr1": dict(largest_patch_size=((32, 32), (64, 64), (64, 64)), smallest_patch_size=((4, 4),),
                 regrid_interval=2, tag_buffer=(1, 1)),
    "amr2": dict(largest_patch_size=((16, 32), (32, 128), (128, 256)), smallest_patch_size=((8, 8),),
                 regrid_interval=4, tag_buffer=(4, 4)),
    "amr3": dict(largest_patch_size=((16, 32), (32, 128), (128, 256)), smallest_patch_size=((8, 8),),
                 regrid_interval=8, tag_buffer=(8, 8)),
    "uniform": dict(nx=128, nv=256, max_levels=1, initial_box=None, regrid_interval=0),
}

# section -> fields stored there in config files
SECTIONS = {
    "domain": ("x_lo", "x_hi", "v_lo", "v_hi"),
    "mesh": ("nx", "nv", "max_levels", "ratios", "initial_box"),
    "amr": ("preset", "largest_patch_size", "smallest_patch_size", "regrid_interval", "tag_buffer",
            "tol", "efficiency", "nest_buffer", "reduction", "reduction_method"),
    "time": ("t_end", "dt0", "safety_fraction", "growth_cap", "stability_coefficient"),
    "ic": ("amplitude", "wavenumber", "limiting", "epsilon", "accel_sign", "ideal_weights"),
    "output": ("output_dir", "output_interval", "snapshot_interval"),
}


@dataclass(frozen=True)
class SimConfig:
    x_lo: float = -10.0 * math.pi / 3.0
    x_hi: float = 10.0 * math.pi / 3.0
    v_lo: float = -8.0
    v_hi: float = 10.0
    nx: int = 16
    nv: int = 32
    max_levels: int = 4
    ratios: tuple = ((2, 4), (4, 2), (2, 2))
    initial_box: tuple | None = ((0, 8), (15, 24))
    preset: str = "amr1"
    largest_patch_size: tuple = ((32, 32), (64, 64), (64, 64))
    smallest_patch_size: tuple = ((4, 4),)
    regrid_interval: int = 2
    tag_buffer: tuple = (1, 1)
    tol: float = 0.01
    efficiency: float = 0.70
    nest_buffer: int = 2
    reduction: str = "subpatch"
    reduction_method: str = "linear"
    t_end: float = 30.0
    dt0: float = 0.01
    safety_fraction: float = 0.5
    growth_cap: float = 1.10
    stability_coefficient: float = 1.7
    amplitude: float = 0.04
    wavenumber: float = 0.3
    limiting: bool = True
    epsilon: float = 1e-6
    accel_sign: float = 1.0
    ideal_weights: str = "subcell"
    output_dir: str = "vpamr_out"
    output_interval: float = 0.5
    snapshot_interval: float = 0.0

    def __post_init__(self):
        if not (self.x_hi > self.x_lo and self.v_hi > self.v_lo):
            raise ValueError("empty domain")
        if self.nx < 5 or self.nv < 5:
            raise ValueError("the coarse mesh needs at least 5 cells per direction")
        if not 1 <= self.max_levels <= len(self.ratios) + 1:
            raise ValueError("max_levels must be between 1 and len(ratios) + 1")
        if self.reduction not in ("mask", "subpatch"):
            raise ValueError(f"unknown reduction {self.reduction!r}")
        if self.t_end < 0 or self.dt0 <= 0:
            raise ValueError("t_end must be non-negative and dt0 positive")
        if self.output_interval <= 0:
            raise ValueError("output_interval must be positive")

    @property
    def refine(self) -> bool:
        return self.max_levels > 1 and self.regrid_interval > 0

    def with_preset(self, name: str) -> "SimConfig":
        name = name.lower()
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return replace(self, preset=name, **PRESETS[name])

    def updated(self, **kw) -> "SimConfig":
        return replace(self, **kw)


def preset(name: str, **overrides) -> SimConfig:
    return SimConfig().with_preset(name).updated(**overrides)


def _tuple(obj):
    if isinstance(obj, (list, tuple)):
        return tuple(_tuple(x) for x in obj)
    return obj


def _parse(name: str, text: str):
    if name not in {f.name for f in fields(SimConfig)}:
        raise ValueError(f"unknown setting {name!r}")
    text = text.strip()
    default = getattr(SimConfig(), name)
    if text.lower() in ("none", ""):
        return None
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(eval_number(text))
    if isinstance(default, str):
        return text
    # tuples of ints: "2,4; 4,2" style or python literal
    try:
        return _tuple(ast.literal_eval(text))
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"cannot parse {name} = {text!r}") from exc


def eval_number(text: str) -> float:
    """Numbers, optionally written with pi (e.g. '-10*pi/3')."""
    allowed = set("0123456789.+-*/()eE pi")
    if not set(text) <= allowed:
        raise ValueError(f"bad number {text!r}")
    return float(eval(text, {"__builtins__": {}}, {"pi": math.pi}))


def load_config(path: str) -> SimConfig:
    """Read an INI file; a `preset` key in [amr] is applied before the
    other keys, so files may override single preset entries."""
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    values = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ValueError(f"{path}: unknown section [{section}]")
        for key, text in cp.items(section):
            if key not in SECTIONS[section]:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")
            values[key] = _parse(key, text)
    cfg = SimConfig()
    if values.get("preset"):
        cfg = cfg.with_preset(values.pop("preset"))
    return replace(cfg, **values)


def to_ini(cfg: SimConfig) -> str:
    cp = configparser.ConfigParser()
    d = asdict(cfg)
    for section, keys in SECTIONS.items():
        cp[section] = {k: repr(d[k]) if not isinstance(d[k], str) else d[k] for k in keys}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
