"""Binary checkpoint format for tiny language models.

Layout (all integers little-endian):

    b"TLMC"                       magic
    uint16 version                currently 1
    uint32 header length
    header                        UTF-8 JSON: dims, tokenizer mode, vocabulary
    float64 arrays                E, W1, b1, W2, b2 in that order, C order
"""

from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

from src.data.tokens import Vocabulary
from src.tinylm.model import PARAM_NAMES, ModelParams

MAGIC = b"TLMC"
VERSION = 1


def checkpoint_bytes(params: ModelParams) -> bytes:
    header = json.dumps(
        {
            "vocab_size": params.vocab_size,
            "context_window": params.context_window,
            "embed_dim": params.embed_dim,
            "hidden_dim": params.hidden_dim,
            "tokenizer": params.vocab.mode,
            "vocab": list(params.vocab.tokens),
        },
        ensure_ascii=False,
        separators=(",", ":"),
    ).encode("utf-8")
    parts = [MAGIC, struct.pack("<HI", VERSION, len(header)), header]
    parts.extend(np.ascontiguousarray(getattr(params, name), dtype="<f8").tobytes() for name in PARAM_NAMES)
    return b"".join(parts)


_PREFIX = struct.Struct("<HI")
_HEADER_KEYS = ("vocab_size", "context_window", "embed_dim", "hidden_dim", "tokenizer", "vocab")


def _read_header(data: bytes, start: int, length: int) -> dict:
    if start + length > len(data):
        raise ValueError("Checkpoint truncated inside its header")
    try:
        header = json.loads(data[start : start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"Checkpoint header is not valid JSON ({exc})") from exc
    if not isinstance(header, dict):
        raise ValueError("Checkpoint header must be a JSON object")
    missing = [key for key in _HEADER_KEYS if key not in header]
    if missing:
        raise ValueError(f"Checkpoint header is missing {', '.join(missing)}")
    for key in ("vocab_size", "context_window", "embed_dim", "hidden_dim"):
        if not isinstance(header[key], int) or isinstance(header[key], bool) or header[key] < 1:
            raise ValueError(f"Checkpoint header field {key} must be a positive integer, got {header[key]!r}")
    if not isinstance(header["vocab"], list) or not all(isinstance(t, str) for t in header["vocab"]):
        raise ValueError("Checkpoint header field vocab must be a list of strings")
    return header


def parse_checkpoint(data: bytes) -> ModelParams:
    if data[:4] != MAGIC:
        raise ValueError("Not a tiny-LM checkpoint (bad magic)")
    offset = len(MAGIC) + _PREFIX.size
    if len(data) < offset:
        raise ValueError(f"Checkpoint truncated: {len(data)} bytes, need at least {offset}")
    version, header_len = _PREFIX.unpack_from(data, len(MAGIC))
    if version != VERSION:
        raise ValueError(f"Unsupported checkpoint version {version}")
    header = _read_header(data, offset, header_len)
    offset += header_len

    vocab = Vocabulary(tuple(header["vocab"]), header["tokenizer"])
    if len(vocab) != header["vocab_size"]:
        raise ValueError("Checkpoint vocabulary does not match its declared size")
    v, c, d, h = len(vocab), header["context_window"], header["embed_dim"], header["hidden_dim"]
    shapes = {"E": (v, d), "W1": (c * d, h), "b1": (h,), "W2": (h, v), "b2": (v,)}
    arrays = {}
    for name in PARAM_NAMES:
        count = int(np.prod(shapes[name]))
        end = offset + 8 * count
        if end > len(data):
            raise ValueError(f"Checkpoint truncated while reading {name}")
        arrays[name] = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64).reshape(shapes[name])
        offset = end
    if offset != len(data):
        raise ValueError("Trailing bytes after checkpoint arrays")
    return ModelParams(vocab, c, d, h, *(arrays[name] for name in PARAM_NAMES))


def save_checkpoint(params: ModelParams, path: str) -> str:
    """Write *params* to *path* and return the file's SHA-256 hex digest."""
    data = checkpoint_bytes(params)
    with open(path, "wb") as f:
        f.write(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path: str) -> ModelParams:
    with open(path, "rb") as f:
        return parse_checkpoint(f.read())
