"""On-disk artifact layout shared by the pipeline stages.

Each stage owns ``<output_dir>/<stage>/`` and finishes by writing a
``manifest.json`` with the package version, a timestamp and the sha256 of
every file it produced. Set ``SOURCE_DATE_EPOCH`` to pin the timestamp.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import shutil
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional

import numpy as np
import pandas as pd

from . import VERSION
from .errors import CausalNetError, StageOrderError

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"

# the file whose presence marks a stage as done
STAGE_OUTPUTS = {
    "extract": "units.jsonl",
    "code": "coded.jsonl",
    "network": "networks.json",
    "stats": "stats.json",
    "cug": "cug.json",
    "pca": "pca.json",
    "regress": "fit.json",
    "report": "report.json",
}
CSV_OPTIONS = {"lineterminator": "\n", "float_format": "%.10g"}


def _plain(obj: Any) -> Any:
    """JSON-ready copy: numpy scalars unwrapped, non-finite floats as null."""
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def build_timestamp() -> str:
    pinned = os.getenv("SOURCE_DATE_EPOCH")
    if pinned:
        moment = datetime.fromtimestamp(int(pinned), tz=timezone.utc)
    else:
        moment = datetime.now(timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


class ArtifactStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._written: Dict[str, List[Path]] = {}

    def ensure_dir(self, stage: str) -> Path:
        path = self.root / stage
        path.mkdir(parents=True, exist_ok=True)
        return path

    def path(self, stage: str, name: str) -> Path:
        return self.root / stage / name

    def has(self, stage: str, name: Optional[str] = None) -> bool:
        return self.path(stage, name or STAGE_OUTPUTS[stage]).is_file()

    def require(self, stage: str, name: Optional[str] = None) -> Path:
        """Path of an upstream artifact, or StageOrderError naming its stage."""
        name = name or STAGE_OUTPUTS[stage]
        p = self.path(stage, name)
        if not p.is_file():
            raise StageOrderError(stage, f"{stage}/{name}")
        return p

    def begin(self, stage: str) -> Path:
        """Clear a stage directory so reruns leave no stale files behind."""
        path = self.root / stage
        if path.exists():
            shutil.rmtree(path)
        self._written[stage] = []
        return self.ensure_dir(stage)

    def record(self, stage: str, path: Path) -> Path:
        self._written.setdefault(stage, []).append(Path(path))
        return Path(path)

    def write_text(self, stage: str, name: str, text: str) -> Path:
        p = self.path(stage, name)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
        return self.record(stage, p)

    def write_json(self, stage: str, name: str, obj: Any) -> Path:
        return self.write_text(stage, name, canonical_json(obj))

    def write_jsonl(self, stage: str, name: str, records: Iterable[Mapping[str, Any]]) -> Path:
        lines = [
            json.dumps(_plain(r), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
            for r in records
        ]
        return self.write_text(stage, name, "".join(line + "\n" for line in lines))

    def write_frame(self, stage: str, name: str, frame: pd.DataFrame) -> Path:
        p = self.path(stage, name)
        p.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(p, index=False, **CSV_OPTIONS)
        return self.record(stage, p)

    def read_json(self, stage: str, name: Optional[str] = None) -> Any:
        return json.loads(self.require(stage, name).read_text(encoding="utf-8"))

    def read_jsonl(self, stage: str, name: Optional[str] = None) -> Iterator[Dict[str, Any]]:
        p = self.require(stage, name)
        with open(p, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as e:
                    raise CausalNetError(f"{p}:{lineno}: corrupt artifact: {e.msg}") from e

    def finish(self, stage: str) -> Path:
        """Write the stage manifest over everything recorded since ``begin``."""
        base = self.root / stage
        files = {}
        for p in sorted(set(self._written.get(stage, [])), key=lambda x: x.as_posix()):
            rel = p.relative_to(base).as_posix()
            files[rel] = {"sha256": sha256_file(p), "bytes": p.stat().st_size}
        manifest = {
            "stage": stage,
            "version": VERSION,
            "created": build_timestamp(),
            "files": files,
        }
        path = self.write_text(stage, MANIFEST, canonical_json(manifest))
        logger.info("%s: wrote %d file(s) to %s", stage, len(files), base)
        return path
