"""Run manifests: every CLI invocation records its config, seed and artifact
digests so any deterministic output can be reproduced byte for byte."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from venuetrace import __version__
from venuetrace import kernels


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _now() -> str:
    return datetime.now(tz=timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None = None
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    started_at: str = field(default_factory=_now)
    finished_at: str | None = None

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path: str | Path) -> None:
        self.outputs[str(path)] = sha256_file(path)

    def finish(self, path: str | Path) -> Path:
        self.finished_at = _now()
        doc = {
            "command": self.command,
            "argv": sys.argv[1:],
            "package_version": __version__,
            "kernel_backend": kernels.BACKEND,
            "config": self.config,
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "results": self.results,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }
        out = Path(path)
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return out
