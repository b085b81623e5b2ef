"""Feature interchange files and persistence helpers.

The interchange format carries one vector per sample and is shared by the
kernel-matrix features (kind "dk") and externally produced deep features
(kind "deep"):

    header line, ASCII:  LDFV1 <kind> <dim> <count>\n
    per record:          <source_id>\n  followed by <dim> IEEE-754
                         single-precision little-endian values

Writer and reader are bit-exact: whatever float32 payload goes in comes
back unchanged. All file writes in this module are atomic
(write-temp-then-rename).
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import MalformedFile

FEATURE_KINDS = ("dk", "deep")
_MAGIC = "LDFV1"


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_json_doc(path: str, doc: dict) -> None:
    """Serialize a structured document deterministically (sorted keys)."""
    atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def read_json_doc(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: invalid JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedFile(f"{path}: expected a JSON object at top level")
    return doc


def encode_features(kind: str, records: list[tuple[str, np.ndarray]]) -> bytes:
    """Build interchange file bytes from (source_id, vector) records."""
    if kind not in FEATURE_KINDS:
        raise ValueError(f"kind must be one of {FEATURE_KINDS}, got {kind!r}")
    if not records:
        raise ValueError("feature file must contain at least one record")
    dim = len(np.asarray(records[0][1]).ravel())
    chunks = [f"{_MAGIC} {kind} {dim} {len(records)}\n".encode("ascii")]
    for source_id, vector in records:
        if "\n" in source_id or "\r" in source_id or not source_id:
            raise ValueError(f"invalid source_id {source_id!r}")
        values = np.asarray(vector).ravel().astype("<f4")
        if values.size != dim:
            raise ValueError(
                f"record {source_id!r} has {values.size} values, expected {dim}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(f"record {source_id!r} contains non-finite values")
        chunks.append(source_id.encode("utf-8") + b"\n")
        chunks.append(values.tobytes())
    return b"".join(chunks)


def write_features(path: str, kind: str, records: list[tuple[str, np.ndarray]]) -> None:
    atomic_write_bytes(path, encode_features(kind, records))


def decode_features(data: bytes) -> tuple[str, int, list[tuple[str, np.ndarray]]]:
    """Parse interchange bytes into (kind, dim, records). Bit-exact reader."""
    header_end = data.find(b"\n")
    if header_end == -1:
        raise MalformedFile("missing feature file header line")
    parts = data[:header_end].decode("ascii", errors="replace").split(" ")
    if len(parts) != 4 or parts[0] != _MAGIC:
        raise MalformedFile(f"bad feature file header {data[:header_end]!r}")
    kind = parts[1]
    if kind not in FEATURE_KINDS:
        raise MalformedFile(f"unknown feature kind {kind!r}")
    try:
        dim, count = int(parts[2]), int(parts[3])
    except ValueError as exc:
        raise MalformedFile(f"bad feature file header {data[:header_end]!r}") from exc
    if dim < 1 or count < 1:
        raise MalformedFile(f"bad feature file header {data[:header_end]!r}")

    records: list[tuple[str, np.ndarray]] = []
    pos = header_end + 1
    payload = 4 * dim
    for _ in range(count):
        id_end = data.find(b"\n", pos)
        if id_end == -1:
            raise MalformedFile("truncated feature file: missing source_id line")
        source_id = data[pos:id_end].decode("utf-8")
        pos = id_end + 1
        raw = data[pos : pos + payload]
        if len(raw) != payload:
            raise MalformedFile(f"truncated feature record {source_id!r}")
        records.append((source_id, np.frombuffer(raw, dtype="<f4").copy()))
        pos += payload
    if pos != len(data):
        raise MalformedFile(f"{len(data) - pos} trailing bytes after last record")
    return kind, dim, records


def read_features(path: str) -> tuple[str, int, list[tuple[str, np.ndarray]]]:
    with open(path, "rb") as fh:
        return decode_features(fh.read())
