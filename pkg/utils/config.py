"""
Process settings and run configuration.

Process-wide settings come from the environment (optionally a `.env` file);
per-run hyperparameters come from a flat `key = value` config file.
"""
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Tuple

from dotenv import load_dotenv

from utils.errors import ConfigError

load_dotenv()
logger = logging.getLogger("LDGCN")

LOG_DIR = os.getenv("LDGCN_LOG_DIR", "logs")
OUTPUT_DIR = os.getenv("LDGCN_OUTPUT_DIR", "outputs")
BENCH_REPEATS = int(os.getenv("LDGCN_BENCH_REPEATS", 5))
MAX_DECODE_LEN = int(os.getenv("LDGCN_MAX_DECODE_LEN", 40))
LOG_LEVEL = os.getenv("LDGCN_LOG_LEVEL", "INFO").upper()

STRATEGIES = ("dense", "group", "tied")
ACTIVATIONS = ("relu", "tanh", "identity")


@dataclass(frozen=True)
class RunConfig:
    strategy: str = "group"
    blocks: Tuple[Tuple[int, ...], ...] = ((4, 2), (4, 2))
    d: int = 32
    N: int = 2
    # layerwise groups; None derives M = L per sub-block
    M: Optional[int] = None
    lam: float = 0.7
    K: int = 2
    activation: str = "relu"
    fusion: bool = True
    dropout: float = 0.0
    lr: float = 1e-3
    epochs: int = 300
    seed: int = 1
    beam: int = 1
    decoder_hidden: int = 64
    embed_dim: int = 32
    max_len: int = MAX_DECODE_LEN
    dataset: Optional[str] = None
    checkpoint: str = str(Path(OUTPUT_DIR) / "model.ckpt")
    metrics: Optional[str] = None

    def stack_config(self):
        """Derives the encoder StackConfig; raises ConfigError when invalid."""
        from layers.ldgcn import DfmConfig
        from layers.strategies import StackConfig

        cfg = StackConfig(
            strategy=self.strategy,
            d=self.d,
            N=self.N,
            blocks=self.blocks,
            dfm=DfmConfig(lam=self.lam, K=self.K, activation=self.activation),
            fusion=self.fusion,
            M=self.M,
            dropout=self.dropout,
        )
        cfg.validate()
        return cfg

    def to_dict(self):
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["blocks"] = format_blocks(self.blocks)
        return out

    @classmethod
    def from_dict(cls, data):
        values = dict(data)
        if isinstance(values.get("blocks"), str):
            values["blocks"] = parse_blocks(values["blocks"])
        return cls(**values)


# Full-scale ratios at desk width: 32 is not divisible by 3*N, so the
# sub-blocks keep the 2:1 ratio as 4+2.
PRESETS = {
    "desk": RunConfig(),
    "full": RunConfig(d=480, blocks=((6, 3),) * 4),
}
# Ablation variants: dense connections, +GC group convolutions, +WT weight
# tying, each with and without dynamic fusion (+DF).
for _strategy, _tag in (("dense", "deepgcn"), ("group", "deepgcn+gc"), ("tied", "deepgcn+wt")):
    PRESETS[_tag] = replace(PRESETS["full"], strategy=_strategy, fusion=False)
    PRESETS[f"{_tag}+df"] = replace(PRESETS["full"], strategy=_strategy, fusion=True)


def parse_blocks(text: str) -> Tuple[Tuple[int, ...], ...]:
    """'6+3,6+3' -> ((6, 3), (6, 3))."""
    try:
        blocks = tuple(
            tuple(int(part) for part in block.split("+"))
            for block in text.replace(" ", "").split(",")
            if block
        )
    except ValueError:
        raise ConfigError(f"Malformed blocks value: {text!r}")
    if not blocks or any(n < 1 for block in blocks for n in block):
        raise ConfigError(f"Blocks need at least one positive layer count: {text!r}")
    return blocks


def format_blocks(blocks) -> str:
    return ",".join("+".join(str(n) for n in block) for block in blocks)


def _parse_optional_int(text: str) -> Optional[int]:
    """`none` (or an empty value) keeps the per-sub-block default."""
    return None if text.lower() in ("", "none") else int(text)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(text)


_CONVERTERS = {
    "strategy": str,
    "blocks": parse_blocks,
    "d": int,
    "N": int,
    "M": _parse_optional_int,
    "lambda": float,
    "K": int,
    "activation": str,
    "fusion": _parse_bool,
    "dropout": float,
    "lr": float,
    "epochs": int,
    "seed": int,
    "beam": int,
    "decoder_hidden": int,
    "embed_dim": int,
    "max_len": int,
    "dataset": str,
    "checkpoint": str,
    "metrics": str,
}


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    """
    Parses flat `key = value` lines into a RunConfig.

    A `preset = <name>` line selects the base values; other keys override it
    regardless of order. Unknown keys and unparsable values are errors.
    """
    preset = "desk"
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"{source}:{lineno}: unknown preset {value!r}")
            preset = value
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            overrides["lam" if key == "lambda" else key] = _CONVERTERS[key](value)
        except (ValueError, ConfigError) as e:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {e}")

    cfg = replace(PRESETS[preset], **overrides)
    if cfg.strategy not in STRATEGIES:
        raise ConfigError(f"{source}: strategy must be one of {STRATEGIES}, got {cfg.strategy!r}")
    if cfg.activation not in ACTIVATIONS:
        raise ConfigError(f"{source}: activation must be one of {ACTIVATIONS}")
    if cfg.epochs < 0 or cfg.beam < 1 or cfg.max_len < 1:
        raise ConfigError(f"{source}: epochs must be >= 0, beam and max_len >= 1")
    if cfg.M is not None and cfg.M < 1:
        raise ConfigError(f"{source}: M must be >= 1, got {cfg.M}")
    if not 0.0 <= cfg.dropout < 1.0:
        raise ConfigError(f"{source}: dropout must lie in [0, 1), got {cfg.dropout}")
    return cfg


def load_run_config(path) -> RunConfig:
    """Loads a RunConfig from a UTF-8 config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")
    cfg = parse_run_config(text, source=str(path))
    logger.info(f"Loaded run config from {path}.")
    return cfg
