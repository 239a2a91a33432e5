"""Reproducibility plumbing: canonical JSON and run manifests.

Everything that may legitimately differ between two identical runs (wall
clock) lives under the manifest's ``excluded`` key; the rest must be
byte-identical on rerun.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def build_manifest(subcommand, flags, seeds, inputs=(), outputs=(), timings=None, base=None):
    """RunManifest as a plain dict. ``inputs``/``outputs`` are file paths."""
    base = Path(base) if base else None

    def rel(p):
        p = Path(p)
        return str(p.relative_to(base)) if base and p.is_relative_to(base) else str(p)

    return {
        "tool_version": __version__,
        "subcommand": subcommand,
        "flags": flags,
        "seeds": seeds,
        "inputs": {rel(p): sha256_file(p) for p in inputs},
        "outputs": {rel(p): sha256_file(p) for p in outputs},
        "excluded": {"wall_clock_seconds": timings or {}},
    }


def strip_excluded(manifest: dict) -> dict:
    return {k: v for k, v in manifest.items() if k != "excluded"}
