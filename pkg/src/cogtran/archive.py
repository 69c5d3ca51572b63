"""Model archive: a directory with config, vocabulary and raw weights.

Layout::

    config.json    model hyperparameters
    vocab.txt      one token per line, line number = id
    weights.json   manifest: name, shape, byte offset of every tensor
    weights.bin    concatenated little-endian float32, row-major
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .encoding import Vocabulary
from .model import CognateTransformer, ModelConfig

CONFIG_FILE = "config.json"
VOCAB_FILE = "vocab.txt"
MANIFEST_FILE = "weights.json"
BLOB_FILE = "weights.bin"
DTYPE = "<f4"


def save_weights(state: dict[str, torch.Tensor], directory) -> None:
    directory = Path(directory)
    entries = []
    offset = 0
    with open(directory / BLOB_FILE, "wb") as blob:
        for name, tensor in state.items():
            # astype with order C keeps 0-d tensors 0-d, unlike ascontiguousarray
            arr = tensor.detach().cpu().numpy().astype(DTYPE, order="C")
            data = arr.tobytes(order="C")
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset,
                            "nbytes": len(data)})
            blob.write(data)
            offset += len(data)
    manifest = {"dtype": "float32", "byteorder": "little", "tensors": entries}
    (directory / MANIFEST_FILE).write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")


def load_weights(directory) -> dict[str, torch.Tensor]:
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
    raw = (directory / BLOB_FILE).read_bytes()
    state = {}
    for e in manifest["tensors"]:
        arr = np.frombuffer(raw, dtype=DTYPE, count=int(np.prod(e["shape"], dtype=np.int64)),
                            offset=e["offset"]).reshape(e["shape"])
        state[e["name"]] = torch.from_numpy(arr.astype(np.float32))
    return state


def save_model(model: CognateTransformer, vocab: Vocabulary, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / CONFIG_FILE).write_text(
        json.dumps(model.config.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    vocab.save(directory / VOCAB_FILE)
    save_weights(model.state_dict(), directory)
    return directory


def load_model(directory) -> tuple[CognateTransformer, Vocabulary]:
    directory = Path(directory)
    if (directory / "model" / CONFIG_FILE).exists():
        # a run directory
        directory = directory / "model"
    cfg = ModelConfig(**json.loads((directory / CONFIG_FILE).read_text(encoding="utf-8")))
    vocab = Vocabulary.load(directory / VOCAB_FILE)
    model = CognateTransformer(cfg)
    model.load_state_dict(load_weights(directory))
    model.eval()
    return model, vocab
