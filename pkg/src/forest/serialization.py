"""Versioned, checksummed forest file format"""
import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from datamodel import ForestFormatError, Schema, StandardizationParams
from forest.forest import ForestConfig, MuralForest
from forest.tree import MuralTree

logger = logging.getLogger(__name__)

MAGIC = "MURAL-FOREST"
FORMAT_VERSION = 1


def _body(forest: MuralForest) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "config": forest.config.to_dict(),
        "schema": forest.schema.to_dict(),
        "standardization": forest.standardization.to_dict(),
        "fingerprint": forest.fingerprint,
        "mnar_vars": [int(v) for v in forest.mnar_vars],
        "trees": [tree.to_dict() for tree in forest.trees],
        "leaf_assignments": forest.leaf_assignments.astype(int).tolist(),
    }


def serialize(forest: MuralForest) -> bytes:
    """
    Encode a forest

    Layout: one header line `MURAL-FOREST <version> <sha256 of body>` then
    the body as canonical JSON (sorted keys, no whitespace).
    """
    body = json.dumps(_body(forest), sort_keys=True, separators=(",", ":")).encode("utf-8")
    checksum = hashlib.sha256(body).hexdigest()
    header = f"{MAGIC} {FORMAT_VERSION} {checksum}\n".encode("ascii")
    return header + body


def deserialize(data: bytes) -> MuralForest:
    """Decode bytes produced by serialize(); rejects other versions and corrupt content"""
    header, sep, body = data.partition(b"\n")
    if not sep:
        raise ForestFormatError("missing header line")
    try:
        magic, version, checksum = header.decode("ascii").split(" ")
    except (UnicodeDecodeError, ValueError):
        raise ForestFormatError("malformed header line")
    if magic != MAGIC:
        raise ForestFormatError("not a forest file")
    if version != str(FORMAT_VERSION):
        raise ForestFormatError(f"unsupported format version {version} (expected {FORMAT_VERSION})")
    if hashlib.sha256(body).hexdigest() != checksum:
        raise ForestFormatError("checksum mismatch: file is corrupt")

    try:
        payload = json.loads(body.decode("utf-8"))
        assignments = np.array(payload["leaf_assignments"], dtype=np.int64)
        assignments.setflags(write=False)
        return MuralForest(
            trees=tuple(MuralTree.from_dict(t) for t in payload["trees"]),
            config=ForestConfig.from_dict(payload["config"]),
            schema=Schema.from_dict(payload["schema"]),
            standardization=StandardizationParams.from_dict(payload["standardization"]),
            leaf_assignments=assignments,
            mnar_vars=tuple(payload["mnar_vars"]),
            fingerprint=payload["fingerprint"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ForestFormatError(f"malformed forest body: {e}")


def save_forest(forest: MuralForest, path) -> None:
    Path(path).write_bytes(serialize(forest))
    logger.info("Wrote forest (%d trees) to %s", forest.n_trees, path)


def load_forest(path) -> MuralForest:
    path = Path(path)
    if not path.exists():
        raise ForestFormatError(f"forest file not found: {path}")
    return deserialize(path.read_bytes())
