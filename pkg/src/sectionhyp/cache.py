"""On-disk cache for extremal sequences and spectra, guarded by a lock file."""
from __future__ import annotations

import json
import os
from pathlib import Path

from filelock import FileLock

from .extremal import ExtremalSequence, build_sequence
from .precision import PrecisionContext, to_mpf
from .theta import CriticalPair, spectrum

CACHE_ENV = "SECTIONHYP_CACHE_DIR"


def default_cache_dir() -> Path:
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "sectionhyp"


class Cache:
    """A directory of JSON files; ``None`` disables caching."""

    def __init__(self, directory: str | os.PathLike | None):
        self.directory = Path(directory) if directory is not None else None

    def _path(self, name: str) -> Path:
        return self.directory / name

    def _read(self, name: str):
        if self.directory is None:
            return None
        path = self._path(name)
        if not path.exists():
            return None
        with FileLock(str(path) + ".lock"):
            try:
                return json.loads(path.read_text())
            except (OSError, ValueError):
                return None

    def _write(self, name: str, data) -> None:
        if self.directory is None:
            return
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self._path(name)
        with FileLock(str(path) + ".lock"):
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(data, indent=1))
            tmp.replace(path)

    def extremal(self, degree: int, ctx: PrecisionContext) -> ExtremalSequence:
        name = f"extremal-{ctx.bits}.json"
        data = self._read(name)
        if data is not None and data.get("precision_bits") == ctx.bits and data.get("degree", 0) >= degree:
            seq = ExtremalSequence.from_dict(data, ctx).truncated(degree)
            return seq
        seq = build_sequence(degree, ctx, verify=False)
        if seq.ctx.bits == ctx.bits:
            self._write(name, seq.to_dict())
        return seq

    def spectrum(self, count: int, ctx: PrecisionContext) -> list[CriticalPair]:
        name = f"spectrum-{ctx.bits}.json"
        data = self._read(name)
        if data is not None and len(data) >= count:
            b = ctx.bits
            return [CriticalPair(to_mpf(d["q_hat"], b), to_mpf(d["u_hat"], b), int(d["k"]),
                                 to_mpf(d["residual_psi"], b), to_mpf(d["residual_dpsi"], b), int(d["k"]) > 25)
                    for d in data[:count]]
        pairs = spectrum(count, ctx)
        # round-trip through the stored decimals so cached and fresh runs agree
        stored = [p.to_dict(ctx.bits) for p in pairs]
        self._write(name, stored)
        b = ctx.bits
        return [CriticalPair(to_mpf(d["q_hat"], b), to_mpf(d["u_hat"], b), int(d["k"]),
                             to_mpf(d["residual_psi"], b), to_mpf(d["residual_dpsi"], b), int(d["k"]) > 25)
                for d in stored]
