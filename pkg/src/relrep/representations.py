"""Per-token vector channels and their composition into sentence matrices.

A representation stack is an ordered list of channels; each channel owns a
column range of the composed L x total_dim matrix.  Static tables, contextual
stores, and POS one-hots are frozen inputs; position tables and the character
sub-network are trainable, so those channels also route gradients from the
matrix back into parameter buffers.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels
from .corpus import LabeledSentence
from .errors import InputError
from .rng import oov_stream


class DimMismatch(InputError):
    pass


class EmptyFile(InputError):
    pass


class BadMagic(InputError):
    pass


class TruncatedFile(InputError):
    pass


class DuplicateSentenceId(InputError):
    pass


class MissingContextual(InputError):
    def __init__(self, sentence_id):
        super().__init__(f"no contextual vectors for sentence {sentence_id}")
        self.sentence_id = sentence_id


class MissingPosTags(InputError):
    def __init__(self, sentence_id):
        super().__init__(f"no POS tags for sentence {sentence_id}")
        self.sentence_id = sentence_id


class TokenCountMismatch(InputError):
    def __init__(self, sentence_id, expected, got):
        super().__init__(f"sentence {sentence_id}: aux data has {got} tokens, "
                         f"corpus tokenization has {expected}")
        self.sentence_id = sentence_id


@dataclass
class ParamSpec:
    """Shape and initializer of one trainable tensor a channel contributes."""
    name: str
    shape: tuple[int, ...]
    init: str           # "uniform" | "glorot" | "zeros"
    bound: float = 0.0  # half-width for "uniform"


# ---------------------------------------------------------------------------
# static tables

class StaticTable:
    """Word -> dense float32 vector, with a total (OOV-safe) lookup."""

    def __init__(self, dim: int, entries: dict[str, np.ndarray], oov_seed: int = 0):
        self.dim = dim
        self.entries = entries
        self.oov_seed = oov_seed
        self._oov_cache: dict[str, np.ndarray] = {}

    def lookup(self, word: str) -> np.ndarray:
        vec = self.entries.get(word)
        if vec is None:
            vec = self.entries.get(word.lower())
        if vec is None:
            vec = self._oov_cache.get(word)
            if vec is None:
                rng = oov_stream(word, self.oov_seed)
                vec = rng.fill_uniform(-0.25, 0.25, (self.dim,), dtype=np.float32)
                self._oov_cache[word] = vec
        return vec

    def __contains__(self, word: str) -> bool:
        return word in self.entries


def load_static_text(path, oov_seed: int = 0) -> StaticTable:
    """Load `word v1 .. vd` lines; an optional `count dim` first line is a header."""
    entries: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    start = 0
    if lines:
        first = lines[0].split()
        if len(first) == 2 and all(_is_int(p) for p in first):
            dim = int(first[1])
            start = 1
    data_lines = [(i + 1, line) for i, line in enumerate(lines[start:], start=start)
                  if line.strip()]
    if not data_lines:
        raise EmptyFile(f"{path}: no vector rows")
    for lineno, line in data_lines:
        parts = line.split()
        if dim is None:
            dim = len(parts) - 1
            if dim < 1:
                raise DimMismatch(f"{path}: line {lineno}: no vector values")
        if len(parts) - 1 != dim:
            raise DimMismatch(f"{path}: line {lineno}: expected {dim} values, "
                              f"got {len(parts) - 1}")
        entries[parts[0]] = np.array(parts[1:], dtype=np.float32)
    return StaticTable(dim, entries, oov_seed)


def _is_int(text: str) -> bool:
    try:
        int(text)
        return True
    except ValueError:
        return False


def lookup_static(table: StaticTable, word: str) -> np.ndarray:
    return table.lookup(word)


# ---------------------------------------------------------------------------
# contextual stores (CTXV1 sidecar format)

CTX_MAGIC = b"CTXV"
CTX_VERSION = 1


class ContextualStore:
    def __init__(self, dim: int, model_id: str, vectors: dict[int, np.ndarray]):
        self.dim = dim
        self.model_id = model_id
        self.vectors = vectors  # sentence id -> (token_count, dim) float32

    def __contains__(self, sentence_id: int) -> bool:
        return sentence_id in self.vectors


def manifest_path(path) -> str:
    return f"{path}.manifest.json"


def read_ctx_store(path) -> ContextualStore:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 13:
        raise TruncatedFile(f"{path}: header incomplete")
    if blob[:4] != CTX_MAGIC:
        raise BadMagic(f"{path}: bad magic {blob[:4]!r}")
    if blob[4] != CTX_VERSION:
        raise BadMagic(f"{path}: unsupported version {blob[4]}")
    dim, count = struct.unpack_from("<II", blob, 5)
    vectors: dict[int, np.ndarray] = {}
    offset = 13
    for _ in range(count):
        if offset + 8 > len(blob):
            raise TruncatedFile(f"{path}: sentence header truncated")
        sid, n_tokens = struct.unpack_from("<II", blob, offset)
        offset += 8
        nbytes = n_tokens * dim * 4
        if offset + nbytes > len(blob):
            raise TruncatedFile(f"{path}: vectors truncated for sentence {sid}")
        if sid in vectors:
            raise DuplicateSentenceId(f"{path}: sentence {sid} appears twice")
        vecs = np.frombuffer(blob, dtype="<f4", count=n_tokens * dim, offset=offset)
        vectors[sid] = vecs.reshape(n_tokens, dim).copy()
        offset += nbytes
    model_id = "unknown"
    try:
        with open(manifest_path(path), encoding="utf-8") as fh:
            model_id = json.load(fh).get("model_id", "unknown")
    except FileNotFoundError:
        pass
    return ContextualStore(dim, model_id, vectors)


def write_ctx_store(path, dim: int, vectors: dict[int, np.ndarray],
                    model_id: str = "synthetic", corpus_hash: str = "") -> None:
    """Write the CTXV1 sidecar and its manifest (used for fixtures and tests)."""
    with open(path, "wb") as fh:
        fh.write(CTX_MAGIC)
        fh.write(bytes([CTX_VERSION]))
        fh.write(struct.pack("<II", dim, len(vectors)))
        for sid, vecs in vectors.items():
            arr = np.asarray(vecs, dtype="<f4")
            if arr.ndim != 2 or arr.shape[1] != dim:
                raise DimMismatch(f"sentence {sid}: vectors must be (tokens, {dim})")
            fh.write(struct.pack("<II", sid, arr.shape[0]))
            fh.write(arr.tobytes())
    with open(manifest_path(path), "w", encoding="utf-8") as fh:
        json.dump({"model_id": model_id, "dim": dim, "corpus_hash": corpus_hash},
                  fh, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# channels

class StaticChannel:
    trainable = False

    def __init__(self, table: StaticTable, name: str = "static"):
        self.table = table
        self.name = name
        self.dim = table.dim

    def param_specs(self):
        return []

    def write(self, out: np.ndarray, sentence: LabeledSentence, n_real: int, params):
        for tok in sentence.tokens[:n_real]:
            out[tok.index] = self.table.lookup(tok.text)
        return None


class ContextualChannel:
    trainable = False

    def __init__(self, store: ContextualStore, name: str = "ctx"):
        self.store = store
        self.name = name
        self.dim = store.dim

    def write(self, out, sentence, n_real, params):
        vecs = self.store.vectors.get(sentence.id)
        if vecs is None:
            raise MissingContextual(sentence.id)
        if vecs.shape[0] != len(sentence.tokens):
            raise TokenCountMismatch(sentence.id, len(sentence.tokens), vecs.shape[0])
        out[:n_real] = vecs[:n_real]
        return None

    def param_specs(self):
        return []


def relative_positions(sentence: LabeledSentence, max_dist: int) -> np.ndarray:
    """Clipped signed distance of each token to each nominal head, as table rows.

    Row = clip(index - head, +-max_dist) + max_dist, so rows lie in
    [0, 2*max_dist]; row 2*max_dist + 1 is reserved for padding tokens.
    """
    idx = np.arange(len(sentence.tokens))
    rows = np.empty((len(sentence.tokens), 2), dtype=np.intp)
    for col, span in enumerate((sentence.e1, sentence.e2)):
        raw = idx - span.head
        rows[:, col] = np.clip(raw, -max_dist, max_dist) + max_dist
    return rows


class PositionChannel:
    trainable = True

    def __init__(self, max_dist: int = 30, dim_per_nominal: int = 5, name: str = "pos"):
        self.max_dist = max_dist
        self.dim_per_nominal = dim_per_nominal
        self.name = name
        self.dim = 2 * dim_per_nominal
        self.rows = 2 * max_dist + 2  # last row is the padding row

    def param_specs(self):
        shape = (self.rows, self.dim_per_nominal)
        return [ParamSpec(f"{self.name}/e1", shape, "uniform", 0.1),
                ParamSpec(f"{self.name}/e2", shape, "uniform", 0.1)]

    def write(self, out, sentence, n_real, params):
        length = out.shape[0]
        rows = np.full((length, 2), self.rows - 1, dtype=np.intp)
        rows[:n_real] = relative_positions(sentence, self.max_dist)[:n_real]
        d = self.dim_per_nominal
        out[:, :d] = params[f"{self.name}/e1"][rows[:, 0]]
        out[:, d:] = params[f"{self.name}/e2"][rows[:, 1]]
        return rows

    def backward(self, d_out, sentence, n_real, params, grads, cache):
        rows = cache
        d = self.dim_per_nominal
        np.add.at(grads[f"{self.name}/e1"], rows[:, 0], d_out[:, :d])
        np.add.at(grads[f"{self.name}/e2"], rows[:, 1], d_out[:, d:])


UNIVERSAL_TAGSET = (
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
)


class PosTagChannel:
    trainable = False

    def __init__(self, tags_by_sentence: dict[int, list[str]],
                 tagset: tuple[str, ...] = UNIVERSAL_TAGSET, name: str = "postag"):
        self.tags_by_sentence = tags_by_sentence
        self.tagset = tuple(tagset)
        self.index = {tag: i for i, tag in enumerate(self.tagset)}
        self.name = name
        self.dim = len(self.tagset) + 1  # one extra UNK slot

    def param_specs(self):
        return []

    def onehot(self, tag: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float32)
        vec[self.index.get(tag, len(self.tagset))] = 1.0
        return vec

    def write(self, out, sentence, n_real, params):
        tags = self.tags_by_sentence.get(sentence.id)
        if tags is None:
            raise MissingPosTags(sentence.id)
        if len(tags) != len(sentence.tokens):
            raise TokenCountMismatch(sentence.id, len(sentence.tokens), len(tags))
        unk = len(self.tagset)
        for i in range(n_real):
            out[i, self.index.get(tags[i], unk)] = 1.0
        return None


def pos_onehot(tag: str, channel: PosTagChannel) -> np.ndarray:
    return channel.onehot(tag)


def read_pos_sidecar(path) -> dict[int, list[str]]:
    """Lines of `sentence_id<TAB>tag1 tag2 ... tagN`."""
    tags: dict[int, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            if "\t" not in line:
                raise InputError(f"{path}: line {lineno}: expected id<TAB>tags")
            sid, rest = line.split("\t", 1)
            tags[int(sid)] = rest.split()
    return tags


class CharChannel:
    """Per-word character convolution with max-pooling.

    Characters index an embedding table by codepoint modulo the table size;
    row 0 doubles as the padding character for words shorter than the window.
    """

    trainable = True

    def __init__(self, char_dim: int = 16, conv_width: int = 3, out_dim: int = 16,
                 vocab_size: int = 256, name: str = "char"):
        self.char_dim = char_dim
        self.conv_width = conv_width
        self.out_dim = out_dim
        self.vocab_size = vocab_size
        self.name = name
        self.dim = out_dim

    def param_specs(self):
        return [
            ParamSpec(f"{self.name}/table", (self.vocab_size, self.char_dim), "uniform", 0.1),
            ParamSpec(f"{self.name}/filters", (self.out_dim, self.conv_width, self.char_dim), "glorot"),
            ParamSpec(f"{self.name}/bias", (self.out_dim,), "zeros"),
        ]

    def _indices(self, word: str) -> np.ndarray:
        idx = [ord(ch) % self.vocab_size for ch in word]
        while len(idx) < self.conv_width:  # pad so at least one window exists
            idx.append(0)
        return np.asarray(idx, dtype=np.intp)

    def forward_word(self, word: str, params):
        idx = self._indices(word)
        emb = params[f"{self.name}/table"][idx]
        pre = kernels.conv1d_forward(emb[None], params[f"{self.name}/filters"],
                                     params[f"{self.name}/bias"])
        pooled, arg = kernels.maxpool_forward(pre)
        return pooled[0], (idx, arg)

    def write(self, out, sentence, n_real, params):
        memo: dict[str, tuple] = {}
        cache = []
        for tok in sentence.tokens[:n_real]:
            hit = memo.get(tok.text)
            if hit is None:
                hit = self.forward_word(tok.text, params)
                memo[tok.text] = hit
            out[tok.index] = hit[0]
            cache.append(hit[1])
        return cache

    def backward(self, d_out, sentence, n_real, params, grads, cache):
        table = params[f"{self.name}/table"]
        filters = params[f"{self.name}/filters"]
        for i in range(n_real):
            idx, arg = cache[i]
            positions = idx.size - self.conv_width + 1
            d_pre = kernels.maxpool_backward(
                np.ascontiguousarray(d_out[i][None]), arg, positions)
            emb = table[idx]
            d_emb, d_w, d_b = kernels.conv1d_backward(emb[None], filters, d_pre)
            grads[f"{self.name}/filters"] += d_w
            grads[f"{self.name}/bias"] += d_b
            np.add.at(grads[f"{self.name}/table"], idx, d_emb[0])


# ---------------------------------------------------------------------------
# stacks and composition

@dataclass
class SentenceMatrix:
    data: np.ndarray                       # (rows, cols)
    channel_offsets: list[tuple[str, int, int]]

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


class RepresentationStack:
    def __init__(self, channels: list):
        if not channels:
            raise InputError("a representation stack needs at least one channel")
        names = [ch.name for ch in channels]
        if len(set(names)) != len(names):
            raise InputError(f"channel names must be unique, got {names}")
        self.channels = list(channels)
        self.total_dim = sum(ch.dim for ch in channels)
        offsets = []
        start = 0
        for ch in channels:
            offsets.append((ch.name, start, start + ch.dim))
            start += ch.dim
        self.channel_offsets = offsets

    @property
    def has_contextual(self) -> bool:
        return any(isinstance(ch, ContextualChannel) for ch in self.channels)

    @property
    def epochs_profile(self) -> str:
        return "contextual" if self.has_contextual else "plain"

    def param_specs(self):
        specs = []
        for ch in self.channels:
            specs.extend(ch.param_specs())
        return specs

    def frozen_block(self, sentence: LabeledSentence, length: int,
                     dtype=np.float32) -> np.ndarray:
        """Compose only the frozen channels (cacheable across training steps)."""
        block = np.zeros((length, self.total_dim), dtype=dtype)
        n_real = min(len(sentence.tokens), length)
        for ch, (_, start, stop) in zip(self.channels, self.channel_offsets):
            if not ch.trainable:
                ch.write(block[:, start:stop], sentence, n_real, None)
        return block

    def write_trainable(self, matrix: np.ndarray, sentence: LabeledSentence,
                        params) -> dict[str, object]:
        n_real = min(len(sentence.tokens), matrix.shape[0])
        caches = {}
        for ch, (_, start, stop) in zip(self.channels, self.channel_offsets):
            if ch.trainable:
                caches[ch.name] = ch.write(matrix[:, start:stop], sentence, n_real, params)
        return caches

    def backward(self, d_matrix: np.ndarray, sentence: LabeledSentence,
                 params, grads, caches) -> None:
        n_real = min(len(sentence.tokens), d_matrix.shape[0])
        for ch, (_, start, stop) in zip(self.channels, self.channel_offsets):
            if ch.trainable:
                ch.backward(d_matrix[:, start:stop], sentence, n_real,
                            params, grads, caches[ch.name])


def compose(stack: RepresentationStack, sentence: LabeledSentence, length: int,
            params=None, dtype=np.float32) -> SentenceMatrix:
    """Compose one sentence: truncate/right-pad to `length` tokens, each channel
    filling its column range.  Trainable channels need their `params`."""
    matrix = stack.frozen_block(sentence, length, dtype)
    if any(ch.trainable for ch in stack.channels):
        if params is None:
            raise InputError("stack has trainable channels; params are required")
        stack.write_trainable(matrix, sentence, params)
    return SentenceMatrix(matrix, list(stack.channel_offsets))
