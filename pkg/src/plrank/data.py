"""Parsing and densification of LETOR-style ranking datasets.

Accepted line format: ``<grade> qid:<id> <index>:<value> ... # comment`` with
1-based feature indices and non-negative integer grades. Lines sharing a qid
are merged into one query group whether or not they are contiguous in the
file; each group keeps its documents in file order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .errors import ParseError, ValidationError

# Gains are 2^grade - 1; grades above this would lose exactness in float64.
MAX_GRADE = 31


@dataclass
class Document:
    """One query-document pair: sparse feature map plus a relevance grade."""

    features: dict[int, float]
    relevance: int


@dataclass
class QueryGroup:
    query_id: int
    documents: list[Document] = field(default_factory=list)
    # Global document ordinals (position among all data lines). Used to align
    # flat per-document score vectors with the original file order even when
    # qid blocks interleave.
    doc_ids: list[int] = field(default_factory=list)

    def relevances(self) -> np.ndarray:
        return np.array([d.relevance for d in self.documents], dtype=np.int64)

    def max_feature_index(self) -> int:
        return max((i for d in self.documents for i in d.features), default=0)


@dataclass
class Dataset:
    groups: list[QueryGroup]
    max_feature_index: int
    max_grade: int

    @property
    def num_documents(self) -> int:
        return sum(len(g.documents) for g in self.groups)


def _parse_line(tokens: list[str], lineno: int) -> tuple[int, int, dict[int, float]]:
    try:
        grade = int(tokens[0])
    except ValueError:
        raise ParseError(f"bad relevance grade {tokens[0]!r}", lineno) from None
    if grade < 0:
        raise ValidationError(f"negative relevance grade {grade}", lineno)
    if grade > MAX_GRADE:
        raise ValidationError(f"relevance grade {grade} exceeds {MAX_GRADE}", lineno)

    if len(tokens) < 2 or not tokens[1].startswith("qid:"):
        raise ParseError("expected 'qid:<int>' after the grade", lineno)
    try:
        qid = int(tokens[1][4:])
    except ValueError:
        raise ParseError(f"bad qid field {tokens[1]!r}", lineno) from None

    features: dict[int, float] = {}
    for tok in tokens[2:]:
        idx_s, sep, val_s = tok.partition(":")
        if not sep:
            raise ParseError(f"bad feature token {tok!r}", lineno)
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise ParseError(f"bad feature token {tok!r}", lineno) from None
        if idx < 1:
            raise ValidationError(f"feature index {idx} must be >= 1", lineno)
        if idx in features:
            raise ValidationError(f"duplicate feature index {idx}", lineno)
        if not math.isfinite(val):
            raise ValidationError(f"non-finite value for feature {idx}", lineno)
        features[idx] = val
    return grade, qid, features


def parse_dataset(source: str | IO[str] | Iterable[str]) -> Dataset:
    """Parse LETOR-format text into a :class:`Dataset`.

    ``source`` may be a string, an open text file, or any iterable of lines.
    ``#`` starts a comment that runs to the end of the line.
    """
    if isinstance(source, str):
        lines: Iterable[str] = source.splitlines()
    else:
        lines = source

    groups: dict[int, QueryGroup] = {}
    order: list[QueryGroup] = []
    max_feature = 0
    max_grade = 0
    ordinal = 0
    for lineno, raw in enumerate(lines, start=1):
        body = raw.split("#", 1)[0]
        tokens = body.split()
        if not tokens:
            continue
        grade, qid, features = _parse_line(tokens, lineno)
        group = groups.get(qid)
        if group is None:
            group = QueryGroup(query_id=qid)
            groups[qid] = group
            order.append(group)
        group.documents.append(Document(features=features, relevance=grade))
        group.doc_ids.append(ordinal)
        ordinal += 1
        if features:
            max_feature = max(max_feature, max(features))
        max_grade = max(max_grade, grade)
    return Dataset(groups=order, max_feature_index=max_feature, max_grade=max_grade)


def load_dataset(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh)


def format_dataset(dataset: Dataset) -> str:
    """Serialize back to LETOR text, preserving the original line order."""
    cells: list[str | None] = [None] * dataset.num_documents
    for group in dataset.groups:
        for doc, ordinal in zip(group.documents, group.doc_ids):
            feats = " ".join(f"{i}:{doc.features[i]!r}" for i in sorted(doc.features))
            line = f"{doc.relevance} qid:{group.query_id}"
            cells[ordinal] = f"{line} {feats}" if feats else line
    return "\n".join(c for c in cells if c is not None) + ("\n" if cells else "")


def dense_features(group: QueryGroup, m: int) -> np.ndarray:
    """Return the |documents| x m dense feature matrix of a query group.

    Column ``t`` holds feature index ``t + 1``; absent features read as 0.0.
    """
    present = group.max_feature_index()
    if m < present:
        raise ValidationError(
            f"matrix width {m} is smaller than max feature index {present}"
        )
    out = np.zeros((len(group.documents), m), dtype=np.float64)
    for row, doc in enumerate(group.documents):
        for idx, val in doc.features.items():
            out[row, idx - 1] = val
    return out
