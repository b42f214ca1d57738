"""SEQLAB/1 model files: a JSON manifest plus a raw little-endian float64 sidecar.

``save_model(model, "tagger.json")`` writes ``tagger.json`` and
``tagger.json.bin``.  The manifest lists every tensor with its shape and
byte offset into the sidecar; tensors are stored row-major.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .cells import PARAM_TYPES
from .crf import CrfModel, FeatureLayout
from .errors import DataFormatError
from .model import SequenceModel
from .vocab import TagSet, Vocabulary

FORMAT_VERSION = "SEQLAB/1"
_LE_F64 = np.dtype("<f8")


def binary_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".bin")


def _tensors(model) -> dict[str, np.ndarray]:
    if isinstance(model, CrfModel):
        return {"embedding": model.embedding, **model.tensors()}
    return model.tensors()


def manifest_for(model, tensor_table) -> dict:
    common = {
        "format_version": FORMAT_VERSION,
        "cell_kind": model.cell_kind,
        "num_tags": model.num_tags,
        "vocab": model.vocab.tokens,
        "unk": model.vocab.unk,
        "tagset": model.tagset.tags,
        "tensors": tensor_table,
    }
    if isinstance(model, CrfModel):
        common.update(dim=model.layout.embedding_dim, features=model.layout.to_dict())
    else:
        common.update(variant=model.variant, use_bias=model.use_bias, seq_unit=model.seq_unit,
                      hidden=model.hidden_size, dim=model.embed_dim)
    return common


def save_model(model, path) -> None:
    path = Path(path)
    table = []
    blobs = []
    offset = 0
    for name, arr in _tensors(model).items():
        blob = np.ascontiguousarray(arr, dtype=_LE_F64).tobytes()
        table.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    manifest = manifest_for(model, table)
    manifest["binary"] = binary_path(path).name
    manifest["binary_bytes"] = offset
    binary_path(path).write_bytes(b"".join(blobs))
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path):
    """Load a :class:`SequenceModel` or :class:`CrfModel` saved by ``save_model``."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"manifest is not valid JSON: {exc}", path=path) from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataFormatError(f"unsupported format_version {manifest.get('format_version')!r}", path=path)
    raw = (path.parent / manifest["binary"]).read_bytes()
    if len(raw) != manifest.get("binary_bytes", len(raw)):
        raise DataFormatError("sidecar size does not match manifest", path=path)
    tensors = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        n = int(np.prod(shape, dtype=np.int64))
        start = entry["offset"]
        if start + 8 * n > len(raw):
            raise DataFormatError(f"tensor {entry['name']} runs past end of sidecar", path=path)
        tensors[entry["name"]] = np.frombuffer(raw, dtype=_LE_F64, count=n, offset=start).reshape(shape).astype(
            np.float64)
    vocab = Vocabulary(manifest["vocab"], unk=manifest["unk"])
    if len(vocab) != len(manifest["vocab"]):
        raise DataFormatError("vocabulary contains duplicates", path=path)
    tagset = TagSet(manifest["tagset"])
    kind = manifest["cell_kind"]
    if kind in ("crf", "crf-nocontext"):
        layout = FeatureLayout(**manifest["features"])
        return CrfModel(vocab, tagset, tensors["embedding"], layout,
                        tensors["emission"], tensors["transition"], tensors["start"])
    if kind not in PARAM_TYPES:
        raise DataFormatError(f"unknown cell_kind {kind!r}", path=path)
    cls = PARAM_TYPES[kind]
    fwd = cls.from_tensors({k[4:]: v for k, v in tensors.items() if k.startswith("fwd.")})
    bwd = cls.from_tensors({k[4:]: v for k, v in tensors.items() if k.startswith("bwd.")})
    return SequenceModel(vocab, tagset, tensors["embedding"], fwd, bwd, tensors["softmax_w"],
                         cell_kind=kind, variant=manifest["variant"], seq_unit=manifest["seq_unit"])
