"""Bit-exact file formats for embeddings, labels, and experiment configs.

The embedding container is a little-endian binary format (magic ``EMBF``)
carrying row-major float32 vectors and a modular byte-sum checksum; labels
travel as ``id,label`` text with ``-1`` marking unlabeled rows. Both formats
round-trip exactly, and corrupted files are rejected with a diagnostic
naming the failing field.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"EMBF"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")  # magic, version, n, d
_FOOTER = struct.Struct("<Q")  # checksum: sum of payload bytes mod 2^64
UNLABELED = -1


class FormatError(ValueError):
    """A file failed structural validation; the message names the field."""


def _checksum(payload: bytes) -> int:
    return int(np.frombuffer(payload, dtype=np.uint8).sum(dtype=np.uint64))


def write_embeddings(path, data: np.ndarray) -> None:
    """Write an n x d matrix as little-endian float32 rows."""
    data = np.ascontiguousarray(np.asarray(data, dtype="<f4"))
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError(f"embedding matrix must be 2-d and non-empty, got shape {data.shape}")
    if not np.isfinite(data).all():
        raise ValueError("embedding matrix contains non-finite values")
    payload = data.tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, data.shape[0], data.shape[1]))
        fh.write(payload)
        fh.write(_FOOTER.pack(_checksum(payload)))


def read_embeddings(path) -> np.ndarray:
    """Read an embedding file back as float32, validating every field."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"truncated header: expected {_HEADER.size} bytes, found {len(raw)}")
    magic, version, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic: expected {MAGIC!r}, found {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version: expected {VERSION}, found {version}")
    if n < 1 or d < 1:
        raise FormatError(f"bad dimensions: n={n}, d={d}")
    expected = 4 * n * d
    payload = raw[_HEADER.size : _HEADER.size + expected]
    if len(payload) < expected:
        raise FormatError(f"truncated payload: expected {expected} bytes, found {len(payload)}")
    footer = raw[_HEADER.size + expected :]
    if len(footer) < _FOOTER.size:
        raise FormatError(f"truncated checksum: expected {_FOOTER.size} bytes, found {len(footer)}")
    (stored,) = _FOOTER.unpack_from(footer)
    actual = _checksum(payload)
    if stored != actual:
        raise FormatError(f"checksum mismatch: expected {stored}, found {actual}")
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()


def read_embeddings_text(path, delimiter: str = ",") -> np.ndarray:
    """Importer for delimiter-separated float rows from any upstream encoder."""
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values = [float(tok) for tok in line.split(delimiter)]
            except ValueError:
                raise FormatError(f"invalid float on line {lineno}: {line!r}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise FormatError(
                    f"ragged row on line {lineno}: expected {width} values, found {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise FormatError("no data rows found")
    return np.asarray(rows, dtype=np.float32)


def write_labels(path, ids, labels) -> None:
    """``id,label`` rows under a fixed header; -1 marks an unlabeled sample."""
    ids = list(ids)
    labels = list(labels)
    if len(ids) != len(labels):
        raise ValueError("ids and labels must have equal length")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,label\n")
        for sample_id, label in zip(ids, labels):
            fh.write(f"{sample_id},{int(label)}\n")


def read_labels(path, num_classes: int | None = None):
    """Read ``(ids, labels)``; labels are validated against 0..K-1 when K is given."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("bad header: file is empty")
    if lines[0].strip() != "id,label":
        raise FormatError(f"bad header: expected 'id,label', found {lines[0].strip()!r}")
    ids: list = []
    labels: list = []
    seen = set()
    for row, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FormatError(f"malformed row {row}: expected 'id,label', found {line!r}")
        raw_id, raw_label = parts[0].strip(), parts[1].strip()
        try:
            label = int(raw_label)
        except ValueError:
            raise FormatError(f"invalid label at row {row}: {raw_label!r}") from None
        if label != UNLABELED and (label < 0 or (num_classes is not None and label >= num_classes)):
            raise FormatError(
                f"label out of range at row {row}: {label} "
                f"(expected 0..{num_classes - 1 if num_classes else '?'} or {UNLABELED})"
            )
        sample_id: object = int(raw_id) if raw_id.lstrip("-").isdigit() else raw_id
        if sample_id in seen:
            raise FormatError(f"duplicate id at row {row}: {raw_id!r}")
        seen.add(sample_id)
        ids.append(sample_id)
        labels.append(label)
    if not ids:
        raise FormatError("no label rows found")
    return tuple(ids), np.asarray(labels, dtype=np.int64)


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` text; '#' starts a comment, blank lines ignored."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise FormatError(f"malformed config line {lineno}: {line.strip()!r}")
            key, value = stripped.split("=", 1)
            key = key.strip()
            if key in out:
                raise FormatError(f"duplicate config key at line {lineno}: {key!r}")
            out[key] = value.strip()
    return out
