"""Layer-wise embedding interchange format.

An embedding set is a directory holding ``manifest.json`` plus one raw
binary file per layer (little-endian 32-bit floats, row-major, P rows of
d values). Row p of every layer holds the vector for item p, where items
are anchored pairs or sentences identified by ``item_ids``.

Layer 0 is the non-contextual input embedding; layers 1..L are the
outputs of the stacked blocks, so ``num_layers`` is L+1.

The manifest carries a format version and a sha256 checksum per layer
file; producers and consumers may run on different machines.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

FORMAT_VERSION = 1
ITEM_KINDS = ("word", "sentence_avg", "sentence_cls")
SIDES = ("src", "tgt")

_MANIFEST_NAME = "manifest.json"


def _layer_filename(index: int) -> str:
    return f"layer_{index:03d}.f32"


@dataclass(frozen=True)
class EmbeddingSet:
    """Layer-indexed matrices of per-item vectors, immutable after creation."""

    model: str
    src_lang: str
    tgt_lang: str
    side: str
    kind: str
    masked: bool
    item_ids: tuple[int, ...]
    layers: tuple[np.ndarray, ...]
    dropped_items: tuple[int, ...] = field(default=())

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_items(self) -> int:
        return len(self.item_ids)

    @property
    def dim(self) -> int:
        return self.layers[0].shape[1]

    def layer(self, index: int) -> np.ndarray:
        return self.layers[index]


def make_embedding_set(
    model: str,
    src_lang: str,
    tgt_lang: str,
    side: str,
    kind: str,
    masked: bool,
    layers,
    item_ids=None,
    dropped_items=(),
) -> EmbeddingSet:
    """Build a validated EmbeddingSet from per-layer matrices."""
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    if kind not in ITEM_KINDS:
        raise ValueError(f"item kind must be one of {ITEM_KINDS}, got {kind!r}")
    if not layers:
        raise ValueError("an embedding set needs at least one layer")
    mats = []
    for idx, mat in enumerate(layers):
        arr = np.ascontiguousarray(mat, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"layer {idx}: expected a 2-d matrix, got shape {arr.shape}")
        arr.flags.writeable = False
        mats.append(arr)
    num_items, dim = mats[0].shape
    if item_ids is None:
        item_ids = range(num_items)
    item_ids = tuple(int(i) for i in item_ids)
    if len(item_ids) != num_items:
        raise ValueError(f"{len(item_ids)} item ids for {num_items} rows")
    if len(set(item_ids)) != len(item_ids):
        raise ValueError("item ids must be unique")
    _validate_matrices(mats, num_items, dim)
    return EmbeddingSet(
        model=model,
        src_lang=src_lang,
        tgt_lang=tgt_lang,
        side=side,
        kind=kind,
        masked=bool(masked),
        item_ids=item_ids,
        layers=tuple(mats),
        dropped_items=tuple(int(i) for i in dropped_items),
    )


def _validate_matrices(mats, num_items: int, dim: int) -> None:
    for idx, arr in enumerate(mats):
        if arr.shape != (num_items, dim):
            raise ValueError(
                f"layer {idx}: shape {arr.shape} does not match layer 0 shape {(num_items, dim)}"
            )
        if not np.all(np.isfinite(arr)):
            bad = int(np.argwhere(~np.isfinite(arr).all(axis=1))[0][0])
            raise ValueError(f"layer {idx}: non-finite value in row {bad}")
        zero = ~arr.any(axis=1)
        if zero.any():
            bad = int(np.argmax(zero))
            raise ValueError(f"layer {idx}: all-zero vector in row {bad}")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _atomic_write_bytes(path, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".store-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_embedding_set(embset: EmbeddingSet, path) -> None:
    """Write manifest plus per-layer binaries under ``path`` (a directory)."""
    _validate_matrices(embset.layers, embset.num_items, embset.dim)
    os.makedirs(path, exist_ok=True)
    layer_entries = []
    for idx, arr in enumerate(embset.layers):
        name = _layer_filename(idx)
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        _atomic_write_bytes(os.path.join(path, name), data)
        layer_entries.append(
            {"file": name, "sha256": hashlib.sha256(data).hexdigest()}
        )
    manifest = {
        "format_version": FORMAT_VERSION,
        "model": embset.model,
        "src_lang": embset.src_lang,
        "tgt_lang": embset.tgt_lang,
        "side": embset.side,
        "kind": embset.kind,
        "masked": embset.masked,
        "num_layers": embset.num_layers,
        "dim": embset.dim,
        "num_items": embset.num_items,
        "item_ids": list(embset.item_ids),
        "dropped_items": list(embset.dropped_items),
        "layers": layer_entries,
    }
    _atomic_write_bytes(
        os.path.join(path, _MANIFEST_NAME),
        (json.dumps(manifest, ensure_ascii=False, indent=2) + "\n").encode("utf-8"),
    )


def read_embedding_set(path) -> EmbeddingSet:
    """Read and validate an embedding set directory."""
    manifest_path = os.path.join(path, _MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise ValueError(f"{path}: missing {_MANIFEST_NAME}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version!r}")
    required = (
        "model", "src_lang", "tgt_lang", "side", "kind", "masked",
        "num_layers", "dim", "num_items", "layers",
    )
    missing = [k for k in required if k not in manifest]
    if missing:
        raise ValueError(f"{path}: manifest missing fields {missing}")
    num_layers = int(manifest["num_layers"])
    num_items = int(manifest["num_items"])
    dim = int(manifest["dim"])
    if num_layers < 1 or num_items < 1 or dim < 1:
        raise ValueError(f"{path}: non-positive num_layers/num_items/dim in manifest")
    entries = manifest["layers"]
    if len(entries) != num_layers:
        raise ValueError(
            f"{path}: manifest declares num_layers {num_layers} "
            f"but lists {len(entries)} layer files"
        )

    # Validate every file size against the manifest before reading any data.
    row_bytes = dim * 4
    sizes = {}
    for entry in entries:
        file_path = os.path.join(path, entry["file"])
        if not os.path.isfile(file_path):
            raise ValueError(f"{path}: missing layer file {entry['file']}")
        sizes[entry["file"]] = os.path.getsize(file_path)
    expected = num_items * row_bytes
    bad = {name: size for name, size in sizes.items() if size != expected}
    if bad:
        implied = ", ".join(
            f"{name}: {size} bytes ({size / row_bytes:g} rows)" for name, size in sizes.items()
        )
        raise ValueError(
            f"{path}: layer file sizes do not match manifest "
            f"(num_items {num_items}, dim {dim}, expected {expected} bytes per layer): {implied}"
        )

    mats = []
    for idx, entry in enumerate(entries):
        file_path = os.path.join(path, entry["file"])
        checksum = _sha256(file_path)
        if checksum != entry.get("sha256"):
            raise ValueError(
                f"{path}: checksum mismatch for {entry['file']}: "
                f"manifest {entry.get('sha256')}, file {checksum}"
            )
        arr = np.fromfile(file_path, dtype="<f4", count=num_items * dim).reshape(num_items, dim)
        mats.append(arr)

    item_ids = manifest.get("item_ids")
    if item_ids is None:
        item_ids = range(num_items)
    return make_embedding_set(
        model=str(manifest["model"]),
        src_lang=str(manifest["src_lang"]),
        tgt_lang=str(manifest["tgt_lang"]),
        side=str(manifest["side"]),
        kind=str(manifest["kind"]),
        masked=bool(manifest["masked"]),
        layers=mats,
        item_ids=item_ids,
        dropped_items=manifest.get("dropped_items", ()),
    )
