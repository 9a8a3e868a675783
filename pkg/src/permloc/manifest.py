"""Run manifests and atomic output writing."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

from . import __version__


def config_hash(obj: dict) -> str:
    canon = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_manifest(out_path, config_obj: dict, timings: dict | None = None,
                   extra: dict | None = None) -> None:
    """Sidecar manifest next to an output: input hash, version, wall times."""
    manifest = {
        "inputs_sha256": config_hash(config_obj),
        "package_version": __version__,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "timings_s": timings or {},
    }
    if extra:
        manifest.update(extra)
    atomic_write_json(str(out_path) + ".manifest.json", manifest)
