"""Weight checkpoints: ``manifest.json`` plus one flat binary container."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..container import read_container, write_container
from ..errors import DataError


def save_checkpoint(state: dict[str, np.ndarray], directory, seed: int, epoch: int, extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = list(state)
    flat = np.concatenate([np.ravel(state[n]) for n in names]) if names else np.zeros(0)
    write_container(directory / "weights.lcw", (1, 1, flat.size), flat)
    manifest = {
        "layers": [{"name": n, "shape": list(np.shape(state[n]))} for n in names],
        "seed": seed,
        "epoch": epoch,
    }
    if extra:
        manifest.update(extra)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return directory


def load_checkpoint(directory) -> tuple[dict[str, np.ndarray], dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    _, flat = read_container(directory / "weights.lcw")
    state: dict[str, np.ndarray] = {}
    offset = 0
    for layer in manifest["layers"]:
        shape = tuple(layer["shape"])
        size = int(np.prod(shape)) if shape else 1
        state[layer["name"]] = flat[offset:offset + size].reshape(shape)
        offset += size
    if offset != flat.size:
        raise DataError(f"{directory}: manifest accounts for {offset} values, file has {flat.size}")
    return state, manifest
