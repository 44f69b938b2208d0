"""Reader for the training-pair directories written by `snapcube dataset`."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .container import load_container


@dataclass(frozen=True)
class Sample:
    id: str
    text: str
    plane: int
    split: str
    pose: dict
    noise_stream: int
    input: np.ndarray        # (nl, nx, W) psi-normalised adjoint / scale
    target: np.ndarray       # (nl, nx, W) sheared AC truth / scale
    measurement: np.ndarray  # (nx, W)


class Dataset:
    def __init__(self, root: str | Path, split: str | None = None):
        self.root = Path(root)
        self.manifest = json.loads((self.root / "manifest.json").read_text())
        entries = self.manifest["samples"]
        self.entries = [e for e in entries if split is None or e["split"] == split]

    @property
    def scale(self) -> float:
        return float(self.manifest["scale"])

    def mask(self) -> np.ndarray:
        return load_container(self.root / self.manifest["mask"])[0]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, n: int) -> Sample:
        e = self.entries[n]
        return Sample(
            id=e["id"],
            text=e["text"],
            plane=int(e["plane"]),
            split=e["split"],
            pose=dict(e["pose"]),
            noise_stream=int(e["noise_stream"]),
            input=load_container(self.root / e["input"])[0],
            target=load_container(self.root / e["target"])[0],
            measurement=load_container(self.root / e["measurement"])[0],
        )
