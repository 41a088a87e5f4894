"""Writer for the layer-wise embedding interchange format.

A set is a directory with ``manifest.json`` plus one raw binary file per
layer: little-endian 32-bit floats, row-major, one row per item. The
manifest carries a format version and a sha256 checksum per layer file.
This mirrors the evaluator's reader bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

FORMAT_VERSION = 1


def write_set(
    path,
    model: str,
    src_lang: str,
    tgt_lang: str,
    side: str,
    kind: str,
    masked: bool,
    layers: list[np.ndarray],
    item_ids: list[int],
    dropped_items: list[int],
) -> None:
    if not layers:
        raise ValueError("no layers to write")
    num_items, dim = layers[0].shape
    if num_items == 0:
        raise ValueError("no items survived; refusing to write an empty embedding set")
    os.makedirs(path, exist_ok=True)
    entries = []
    for idx, mat in enumerate(layers):
        arr = np.ascontiguousarray(mat, dtype="<f4")
        if arr.shape != (num_items, dim):
            raise ValueError(f"layer {idx}: shape {arr.shape} != {(num_items, dim)}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"layer {idx}: non-finite values in output")
        if np.any(~arr.any(axis=1)):
            raise ValueError(f"layer {idx}: all-zero vector in output")
        name = f"layer_{idx:03d}.f32"
        data = arr.tobytes()
        with open(os.path.join(path, name), "wb") as fh:
            fh.write(data)
        entries.append({"file": name, "sha256": hashlib.sha256(data).hexdigest()})
    manifest = {
        "format_version": FORMAT_VERSION,
        "model": model,
        "src_lang": src_lang,
        "tgt_lang": tgt_lang,
        "side": side,
        "kind": kind,
        "masked": bool(masked),
        "num_layers": len(layers),
        "dim": int(dim),
        "num_items": int(num_items),
        "item_ids": [int(i) for i in item_ids],
        "dropped_items": [int(i) for i in dropped_items],
        "layers": entries,
    }
    with open(os.path.join(path, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
