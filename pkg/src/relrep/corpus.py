"""SemEval-2010 Task 8 corpus parsing, label encoding, and splitting.

The corpus is two-line records separated by blank lines:

    8	"The <e1>car</e1> has an <e2>engine</e2>."
    Part-Whole(e1,e2)
    Comment: optional, ignored

Tokenization is whitespace splitting with leading/trailing punctuation
detached, so it needs no external tools and sidecar files (POS tags,
contextual vectors) can align to it exactly.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .errors import InputError
from .rng import stream

PUNCT = set(".,;:!?\"'()")

_DIRECTION_RE = re.compile(r"\((e1,e2|e2,e1)\)$")


class MalformedRecord(InputError):
    def __init__(self, sentence_id, message):
        super().__init__(f"sentence {sentence_id}: {message}")
        self.sentence_id = sentence_id


class UnknownLabel(InputError):
    pass


class InvalidFraction(InputError):
    pass


@dataclass(frozen=True)
class Token:
    text: str
    index: int


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int  # inclusive

    @property
    def head(self) -> int:
        """Head token = last token of the span."""
        return self.end


@dataclass(frozen=True)
class LabeledSentence:
    id: int
    tokens: tuple[Token, ...]
    e1: EntitySpan
    e2: EntitySpan
    label: str

    def token_texts(self) -> list[str]:
        return [t.text for t in self.tokens]


@dataclass(frozen=True)
class LabelSet:
    names: tuple[str, ...]
    negative_index: int | None
    direction_policy: str  # "collapse" | "keep"

    @classmethod
    def from_labels(cls, labels, direction_policy="collapse", negative_label="Other"):
        if direction_policy not in ("collapse", "keep"):
            raise InputError(f"unknown direction policy {direction_policy!r}")
        canon = {canonical_label(lab, direction_policy) for lab in labels}
        names = tuple(sorted(canon))
        negative_index = names.index(negative_label) if negative_label in names else None
        return cls(names, negative_index, direction_policy)

    def encode(self, label: str) -> int:
        canon = canonical_label(label, self.direction_policy)
        try:
            return self.names.index(canon)
        except ValueError:
            raise UnknownLabel(f"label {label!r} not in label set") from None

    def decode(self, index: int) -> str:
        return self.names[index]

    def __len__(self) -> int:
        return len(self.names)


@dataclass
class Dataset:
    split: str
    sentences: list[LabeledSentence]
    labels: LabelSet = field(default=None)

    def __post_init__(self):
        if self.labels is None:
            self.labels = LabelSet.from_labels(s.label for s in self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)


def canonical_label(label: str, direction_policy: str) -> str:
    if direction_policy == "collapse":
        return _DIRECTION_RE.sub("", label)
    return label


def tokenize(text: str) -> list[Token]:
    """Whitespace split, then detach leading/trailing punctuation characters."""
    words: list[str] = []
    for chunk in text.split():
        lead = []
        while chunk and chunk[0] in PUNCT:
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail = []
        while chunk and chunk[-1] in PUNCT:
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        words.extend(lead)
        if chunk:
            words.append(chunk)
        words.extend(reversed(trail))
    return [Token(w, i) for i, w in enumerate(words)]


def _split_record_sentence(sentence_id: int, text: str):
    """Split markup'd sentence text into five segments around the two entities."""
    segments = []
    spans = {}
    rest = text
    for tag in ("e1", "e2"):
        open_tag, close_tag = f"<{tag}>", f"</{tag}>"
        start = rest.find(open_tag)
        if start < 0:
            raise MalformedRecord(sentence_id, f"missing {open_tag} tag")
        end = rest.find(close_tag, start)
        if end < 0:
            raise MalformedRecord(sentence_id, f"unpaired {open_tag} tag")
        segments.append(("text", rest[:start]))
        segments.append((tag, rest[start + len(open_tag):end]))
        rest = rest[end + len(close_tag):]
    segments.append(("text", rest))
    for tag in ("e1", "e2"):
        if f"<{tag}>" in rest or f"</{tag}>" in rest:
            raise MalformedRecord(sentence_id, f"duplicate {tag} markup")

    tokens: list[Token] = []
    for kind, segment in segments:
        seg_tokens = tokenize(segment)
        offset = len(tokens)
        tokens.extend(Token(t.text, offset + t.index) for t in seg_tokens)
        if kind in ("e1", "e2"):
            if not seg_tokens:
                raise MalformedRecord(sentence_id, f"empty {kind} span")
            spans[kind] = EntitySpan(offset, len(tokens) - 1)
    return tuple(tokens), spans["e1"], spans["e2"]


def parse_semeval(raw: str, split: str = "train",
                  direction_policy: str = "collapse") -> Dataset:
    """Parse the two-line record format into a Dataset."""
    sentences = []
    lines = raw.splitlines()
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        header = lines[i]
        if "\t" not in header:
            raise MalformedRecord(header[:40], "expected '<id>\\t\"<sentence>\"'")
        id_part, text = header.split("\t", 1)
        try:
            sentence_id = int(id_part)
        except ValueError:
            raise MalformedRecord(id_part, "sentence id is not an integer") from None
        text = text.strip()
        if len(text) >= 2 and text[0] == '"' and text[-1] == '"':
            text = text[1:-1]
        if i + 1 >= len(lines) or not lines[i + 1].strip():
            raise MalformedRecord(sentence_id, "missing relation label line")
        label = lines[i + 1].strip()
        i += 2
        if i < len(lines) and lines[i].strip().startswith("Comment:"):
            i += 1
        if i < len(lines) and lines[i].strip():
            raise MalformedRecord(sentence_id, "expected blank line after record")
        tokens, e1, e2 = _split_record_sentence(sentence_id, text)
        if _spans_overlap(e1, e2):
            raise MalformedRecord(sentence_id, "overlapping entity spans")
        sentences.append(LabeledSentence(sentence_id, tokens, e1, e2, label))
    return Dataset(split, sentences,
                   LabelSet.from_labels((s.label for s in sentences), direction_policy)
                   if sentences else LabelSet((), None, direction_policy))


def _spans_overlap(a: EntitySpan, b: EntitySpan) -> bool:
    return a.start <= b.end and b.start <= a.end


def render_with_markup(sentence: LabeledSentence) -> str:
    """Space-join tokens and re-insert entity tags at the recorded spans."""
    parts = []
    for tok in sentence.tokens:
        text = tok.text
        if tok.index == sentence.e1.start:
            text = "<e1>" + text
        if tok.index == sentence.e2.start:
            text = "<e2>" + text
        if tok.index == sentence.e1.end:
            text = text + "</e1>"
        if tok.index == sentence.e2.end:
            text = text + "</e2>"
        parts.append(text)
    return " ".join(parts)


def encode_labels(dataset: Dataset, labels: LabelSet) -> list[int]:
    """Class index per sentence under a label set built from the training split."""
    return [labels.encode(s.label) for s in dataset.sentences]


def split_train_dev(train: Dataset, dev_fraction: float, seed: int):
    """Deterministic shuffle, then the tail ceil(fraction*N) sentences become dev."""
    if not train.sentences:
        raise InputError("cannot split an empty dataset")
    if not 0.0 < dev_fraction < 1.0:
        raise InvalidFraction(f"dev fraction must be in (0, 1), got {dev_fraction}")
    order = list(range(len(train.sentences)))
    stream(seed, "split").shuffle(order)
    n_dev = math.ceil(dev_fraction * len(order))
    shuffled = [train.sentences[i] for i in order]
    return (Dataset("train", shuffled[:-n_dev], train.labels),
            Dataset("dev", shuffled[-n_dev:], train.labels))


def save_dataset(dataset: Dataset, path) -> None:
    """Write the internal JSON form (stable key order, so reruns are byte-identical)."""
    records = [
        {
            "id": s.id,
            "tokens": s.token_texts(),
            "e1": {"start": s.e1.start, "end": s.e1.end, "head": s.e1.head},
            "e2": {"start": s.e2.start, "end": s.e2.end, "head": s.e2.head},
            "label": s.label,
        }
        for s in dataset.sentences
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(records, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_dataset(path, split: str = "train", direction_policy: str = "collapse") -> Dataset:
    with open(path, encoding="utf-8") as fh:
        records = json.load(fh)
    sentences = []
    for rec in records:
        tokens = tuple(Token(t, i) for i, t in enumerate(rec["tokens"]))
        sentences.append(LabeledSentence(
            rec["id"], tokens,
            EntitySpan(rec["e1"]["start"], rec["e1"]["end"]),
            EntitySpan(rec["e2"]["start"], rec["e2"]["end"]),
            rec["label"],
        ))
    return Dataset(split, sentences,
                   LabelSet.from_labels((s.label for s in sentences), direction_policy)
                   if sentences else LabelSet((), None, direction_policy))
