"""Stage manifests: content hashes of inputs, config hash, tool version.

A manifest pins what a stage consumed so reruns are checkable; stages
refuse to overwrite existing outputs unless forced.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(config_path: Path | None) -> str:
    if config_path is None:
        return "none"
    return file_sha256(config_path)


def write_manifest(stage: str, out_dir: Path, inputs: list[Path],
                   outputs: list[Path], cfg_hash: str) -> Path:
    manifest = {
        "stage": stage,
        "tool_version": __version__,
        "config_hash": cfg_hash,
        "inputs": {str(p): file_sha256(p) for p in sorted(inputs) if p.exists()},
        "outputs": [str(p) for p in sorted(outputs)],
    }
    path = out_dir / f"manifest.{stage}.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def check_overwrite(outputs: list[Path], force: bool) -> None:
    existing = [str(p) for p in outputs if p.exists()]
    if existing and not force:
        raise FileExistsError(
            f"refusing to overwrite {existing}; pass --force to allow"
        )
