"""
Result Writer - CSV/JSON outputs and the run manifest written next to them.
"""

import json
import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field

from .. import __version__

logger = logging.getLogger(__name__)

def format_float(value: float) -> str:
    """Ten significant digits; integral values keep a trailing '.0'."""
    text = f"{value:.10g}"
    return text if any(c in text for c in '.enai') else text + '.0'


class RunManifest(BaseModel):
    """Everything needed to rerun a command bit-for-bit."""

    command: str
    config: Dict[str, Any]
    seed: int
    version: str = __version__
    started: str
    finished: Optional[str] = None
    wall_time: Optional[float] = None
    outputs: List[str] = Field(default_factory=list)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class ResultWriter:
    """Writes the outputs of one command run and records them in its manifest."""

    def __init__(self, out: Path, command: str, config: Dict[str, Any], seed: int):
        """
        Args:
            out: Primary output path; the manifest goes to ``<out>.manifest.json``
            command: Command name
            config: Effective configuration (flags after merging file and defaults)
            seed: Run seed
        """
        self.out = Path(out)
        self._clock = time.perf_counter()
        self.manifest = RunManifest(
            command=command,
            config={key: _jsonable(value) for key, value in config.items()},
            seed=seed,
            started=datetime.now(timezone.utc).isoformat(),
        )
        self.out.parent.mkdir(parents=True, exist_ok=True)

    def sibling(self, suffix: str) -> Path:
        """Path next to the primary output, e.g. ``run.edges.csv`` for suffix '.edges.csv'."""
        return self.out.with_name(self.out.stem + suffix)

    def write_table(self, table: pd.DataFrame, path: Optional[Path] = None) -> str:
        """
        Write a table as CSV with a header row and a fixed float format.

        Returns:
            The CSV text that was written
        """
        path = Path(path) if path is not None else self.out
        text = table.to_csv(index=False, float_format=format_float, lineterminator='\n')
        path.write_text(text, encoding='utf-8')
        self.add_output(path)
        return text

    def write_json(self, document: Any, path: Optional[Path] = None) -> None:
        path = Path(path) if path is not None else self.out
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2)
        self.add_output(path)

    def add_output(self, path: Path) -> None:
        self.manifest.outputs.append(str(path))
        logger.debug(f"wrote {path}")

    @property
    def manifest_path(self) -> Path:
        return self.out.with_name(self.out.name + '.manifest.json')

    def finish(self) -> Path:
        """Stamp the end time and write the manifest."""
        self.manifest.finished = datetime.now(timezone.utc).isoformat()
        self.manifest.wall_time = time.perf_counter() - self._clock
        path = self.manifest_path
        path.write_text(self.manifest.model_dump_json(indent=2), encoding='utf-8')
        return path
