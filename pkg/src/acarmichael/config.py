"""Parameter files, run configuration and logging setup.

A parameter file is a flat list of ``key = value`` assignments::

    # a = -1 construction over explicit blocks
    a = -1
    mode = relaxed
    blocks = [3, 5, 7, 11]
    k_cap = 64
    kprime_cap = 500

Values are typed with ``yaml.safe_load``, so numbers, lists and bare words
come out as int, float, list and str.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

import yaml

from acarmichael.construct import ConstructionParams

logger = logging.getLogger(__name__)

PARAM_KEYS = tuple(f.name for f in fields(ConstructionParams))
TRACE_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
STDERR_FORMAT = "%(levelname)s %(name)s: %(message)s"


class ParamsError(ValueError):
    """Raised for a malformed parameter file."""


def parse_params(text: str, source: str = "<params>") -> dict:
    """Parse ``key = value`` lines into a dict of typed values."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamsError(f"{source}:{lineno}: expected 'key = value', got '{raw.strip()}'")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in PARAM_KEYS:
            raise ParamsError(f"{source}:{lineno}: unknown key '{key}'. Known keys: {', '.join(PARAM_KEYS)}")
        if key in values:
            raise ParamsError(f"{source}:{lineno}: duplicate key '{key}'")
        try:
            values[key] = yaml.safe_load(value) if value else None
        except yaml.YAMLError as exc:
            raise ParamsError(f"{source}:{lineno}: cannot parse value for '{key}': {exc}") from exc
    if "a" not in values:
        raise ParamsError(f"{source}: missing required key 'a'")
    return values


def load_params_file(path: Union[str, Path], **overrides) -> ConstructionParams:
    """Read a parameter file and build ConstructionParams; ``overrides`` that are not None win."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParamsError(f"cannot read parameter file {path}: {exc}") from exc
    values = parse_params(text, source=path.name)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        params = ConstructionParams(**values)
    except (TypeError, ValueError) as exc:
        raise ParamsError(f"{path.name}: {exc}") from exc
    logger.debug("loaded %s: %s", path, params.to_dict())
    return params


@dataclass
class RunConfig:
    """What a CLI invocation ran with; echoed alongside every output."""

    command: str
    output_format: str
    options: dict = field(default_factory=dict)
    seed: Optional[int] = None
    threads: int = 1

    def to_dict(self) -> dict:
        data = asdict(self)
        if self.seed is None:
            del data["seed"]
        return data


def configure_logging(verbosity: int = 0, trace_file: Optional[Union[str, Path]] = None) -> None:
    """Route package logs to stderr (WARNING, INFO at -v, DEBUG at -vv) and optionally to a DEBUG trace file."""
    root = logging.getLogger("acarmichael")
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(logging.DEBUG)
    root.propagate = False

    stderr = logging.StreamHandler(sys.stderr)
    stderr.setLevel({0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG))
    stderr.setFormatter(logging.Formatter(STDERR_FORMAT))
    root.addHandler(stderr)

    if trace_file is not None:
        trace = logging.FileHandler(trace_file, mode="w", encoding="utf-8")
        trace.setLevel(logging.DEBUG)
        trace.setFormatter(logging.Formatter(TRACE_FORMAT))
        root.addHandler(trace)
