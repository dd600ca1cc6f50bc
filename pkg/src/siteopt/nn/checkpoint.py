"""Parameter checkpoints: named float64 tensors in an npz container with a
format version tag."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import ParamStore

CHECKPOINT_VERSION = 1


def save_params(store: ParamStore, path: str | Path) -> None:
    payload = {f"param/{name}": t.data for name, t in store.params.items()}
    payload["__version__"] = np.array(CHECKPOINT_VERSION)
    payload["__seed__"] = np.array(store.seed)
    np.savez(path, **payload)


def load_params(store: ParamStore, path: str | Path) -> None:
    with np.load(path) as archive:
        version = int(archive["__version__"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        values = {key[len("param/"):]: archive[key]
                  for key in archive.files if key.startswith("param/")}
    missing = set(store.names()) - set(values)
    if missing:
        raise ValueError(f"checkpoint missing parameters: {sorted(missing)}")
    store.set_values(values)
