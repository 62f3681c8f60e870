import json
import struct

import numpy as np
import pytest

from relrep.representations import (BadMagic, DuplicateSentenceId, TruncatedFile,
                                    manifest_path, read_ctx_store, write_ctx_store)


def small_store(tmp_path, name="v.ctxv1"):
    path = tmp_path / name
    vecs = {5: np.arange(12, dtype=np.float32).reshape(3, 4)}
    write_ctx_store(path, 4, vecs, model_id="test-model", corpus_hash="abc")
    return path, vecs


def test_round_trip(tmp_path):
    path, vecs = small_store(tmp_path)
    store = read_ctx_store(path)
    assert store.dim == 4
    assert store.model_id == "test-model"
    assert 5 in store
    got = store.vectors[5]
    assert got.shape == (3, 4)
    assert np.array_equal(got, vecs[5])


def test_manifest_contents(tmp_path):
    path, _ = small_store(tmp_path)
    manifest = json.loads(open(manifest_path(path)).read())
    assert manifest == {"model_id": "test-model", "dim": 4, "corpus_hash": "abc"}


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ctxv1"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(BadMagic):
        read_ctx_store(path)


def test_unsupported_version(tmp_path):
    path, _ = small_store(tmp_path)
    blob = bytearray(path.read_bytes())
    blob[4] = 2
    path.write_bytes(bytes(blob))
    with pytest.raises(BadMagic, match="version"):
        read_ctx_store(path)


def test_truncated_mid_record(tmp_path):
    path, _ = small_store(tmp_path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(TruncatedFile):
        read_ctx_store(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "t.ctxv1"
    path.write_bytes(b"CTXV\x01\x04")
    with pytest.raises(TruncatedFile):
        read_ctx_store(path)


def test_duplicate_sentence_id(tmp_path):
    path = tmp_path / "dup.ctxv1"
    record = struct.pack("<II", 9, 1) + np.float32([1, 2]).tobytes()
    blob = b"CTXV" + bytes([1]) + struct.pack("<II", 2, 2) + record + record
    path.write_bytes(blob)
    with pytest.raises(DuplicateSentenceId):
        read_ctx_store(path)


def test_binary_layout_is_exact(tmp_path):
    """Freeze the wire format byte-for-byte on a tiny example."""
    path = tmp_path / "wire.ctxv1"
    write_ctx_store(path, 2, {7: np.float32([[1.0, -2.0]])})
    expected = (b"CTXV" + bytes([1])
                + struct.pack("<II", 2, 1)
                + struct.pack("<II", 7, 1)
                + struct.pack("<ff", 1.0, -2.0))
    assert path.read_bytes() == expected


def test_missing_manifest_defaults_model_id(tmp_path):
    path, _ = small_store(tmp_path)
    import os
    os.remove(manifest_path(path))
    assert read_ctx_store(path).model_id == "unknown"
