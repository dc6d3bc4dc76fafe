"""Disk cache of differential ranks.

One JSON file per section system, named by the system hash, holding the
system's rebuild recipe and a map "p,q,prime" -> rank.  Entries are written
atomically; a file that fails to parse is evicted with a warning.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import warnings
from pathlib import Path


def default_cache_dir() -> Path:
    env = os.environ.get("KOSZULNC_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "koszulnc"


class RankCache:
    def __init__(self, directory=None):
        self.dir = Path(directory) if directory else default_cache_dir()
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, system_hash: str) -> Path:
        return self.dir / f"{system_hash}.json"

    def _load(self, system_hash: str):
        path = self._path(system_hash)
        if not path.exists():
            return None
        try:
            with open(path) as fh:
                return json.load(fh)
        except (json.JSONDecodeError, OSError) as e:
            warnings.warn(f"evicting corrupted cache entry {path.name}: {e}")
            try:
                path.unlink()
            except OSError:
                pass
            return None

    def get(self, system_hash, p, q, prime):
        with self._lock:
            doc = self._load(system_hash)
        if doc is None:
            return None
        return doc.get("ranks", {}).get(f"{p},{q},{prime}")

    def put(self, system_hash, p, q, prime, value, meta=None):
        with self._lock:
            doc = self._load(system_hash) or {"meta": meta, "ranks": {}}
            if meta is not None and doc.get("meta") is None:
                doc["meta"] = meta
            doc["ranks"][f"{p},{q},{prime}"] = int(value)
            fd, tmp = tempfile.mkstemp(dir=self.dir, suffix=".tmp")
            try:
                with os.fdopen(fd, "w") as fh:
                    json.dump(doc, fh, sort_keys=True)
                os.replace(tmp, self._path(system_hash))
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise

    def entries(self):
        out = []
        for path in sorted(self.dir.glob("*.json")):
            doc = self._load(path.stem)
            if doc is None:
                continue
            for key, val in sorted(doc.get("ranks", {}).items()):
                p, q, prime = key.split(",")
                out.append(
                    {"system": path.stem, "p": int(p), "q": int(q),
                     "prime": int(prime), "rank": val,
                     "has_meta": doc.get("meta") is not None}
                )
        return out

    def clear(self) -> int:
        n = 0
        for path in self.dir.glob("*.json"):
            path.unlink()
            n += 1
        return n

    def verify(self, sample: int = 5, rng_seed: int = 0):
        """Recompute a random sample of cached ranks from their stored
        system recipes.  Returns (checked, mismatches)."""
        import numpy as np

        from .fields import PrimeField
        from .geometry import system_from_meta
        from .koszul import koszul_differential
        from .linalg import rank as exact_rank

        entries = [e for e in self.entries() if e["has_meta"]]
        if not entries:
            return 0, []
        rng = np.random.default_rng(rng_seed)
        picks = rng.choice(len(entries), size=min(sample, len(entries)), replace=False)
        mismatches = []
        systems = {}
        for i in sorted(int(x) for x in picks):
            e = entries[i]
            doc = self._load(e["system"])
            key = (e["system"], e["prime"])
            if key not in systems:
                systems[key] = system_from_meta(doc["meta"], PrimeField(e["prime"]))
            mat = koszul_differential(systems[key], e["p"], e["q"])
            got = exact_rank(mat)
            if got != e["rank"]:
                mismatches.append({**e, "recomputed": got})
        return len(picks), mismatches
