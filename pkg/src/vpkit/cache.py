"""Content-addressed disk cache and atomic file output."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

CACHE_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=True)


def cache_key(inputs: dict) -> str:
    """sha256 of the canonical JSON of ``inputs`` (key order irrelevant)."""
    return hashlib.sha256(canonical_json({"v": CACHE_VERSION, "inputs": inputs}).encode()).hexdigest()


def atomic_write_bytes(path: str | Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str):
    atomic_write_bytes(path, text.encode())


class ArrayCache:
    """npz entries named by cache key, with a JSON metadata record inside each entry."""

    def __init__(self, root: str | Path, enabled: bool = True):
        self.root = Path(root)
        self.enabled = enabled

    def path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.npz"

    def load(self, key: str):
        if not self.enabled:
            return None
        p = self.path(key)
        if not p.exists():
            return None
        with np.load(p, allow_pickle=False) as z:
            arrays = {k: z[k] for k in z.files if k != "__meta__"}
            meta = json.loads(str(z["__meta__"]))
        return arrays, meta

    def store(self, key: str, arrays: dict, meta: dict):
        if not self.enabled:
            return
        import io

        buf = io.BytesIO()
        np.savez(buf, __meta__=np.array(canonical_json(meta)), **arrays)
        atomic_write_bytes(self.path(key), buf.getvalue())
