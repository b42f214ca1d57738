"""BIO encoding/decoding, entity-level micro P/R/F, and k-fold splits."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import ContractError
from .numerics import Rng
from .vocab import check_tag

MATCHING = "exact-span"


class EntitySpan(NamedTuple):
    start: int  # inclusive
    end: int  # exclusive
    label: str


def bio_encode(spans: Iterable[EntitySpan], length: int) -> list[str]:
    tags = ["O"] * length
    for start, end, label in sorted(spans):
        if not (0 <= start < end <= length):
            raise ContractError(f"span ({start}, {end}) outside sequence of length {length}")
        if any(t != "O" for t in tags[start:end]):
            raise ContractError(f"span ({start}, {end}, {label}) overlaps another span")
        tags[start] = f"B-{label}"
        for i in range(start + 1, end):
            tags[i] = f"I-{label}"
    return tags


def bio_decode(tags: Sequence[str]) -> list[EntitySpan]:
    """Decode BIO tags into spans, repairing malformed runs conlleval-style.

    An ``I-X`` that does not continue an open ``X`` span starts a new span,
    so ``O I-X`` and ``B-Y I-X`` both yield a span beginning at the ``I-X``.
    """
    spans = []
    start = None
    label = None
    for i, tag in enumerate(tags):
        check_tag(tag)
        if tag == "O":
            if start is not None:
                spans.append(EntitySpan(start, i, label))
            start = label = None
            continue
        prefix, lab = tag[0], tag[2:]
        if prefix == "I" and start is not None and lab == label:
            continue
        if start is not None:
            spans.append(EntitySpan(start, i, label))
        start, label = i, lab
    if start is not None:
        spans.append(EntitySpan(start, len(tags), label))
    return spans


@dataclass
class Metrics:
    """Entity counts per label plus pooled (micro-averaged) scores."""

    per_label: dict[str, dict[str, int]] = field(default_factory=dict)
    token_correct: int = 0
    token_total: int = 0

    def add(self, label: str, kind: str, n: int = 1) -> None:
        counts = self.per_label.setdefault(label, {"tp": 0, "fp": 0, "fn": 0})
        counts[kind] += n

    def merge(self, other: "Metrics") -> "Metrics":
        out = Metrics({k: dict(v) for k, v in self.per_label.items()},
                      self.token_correct, self.token_total)
        for label, counts in other.per_label.items():
            for kind, n in counts.items():
                out.add(label, kind, n)
        out.token_correct += other.token_correct
        out.token_total += other.token_total
        return out

    def _total(self, kind):
        return sum(c[kind] for c in self.per_label.values())

    @property
    def tp(self) -> int:
        return self._total("tp")

    @property
    def fp(self) -> int:
        return self._total("fp")

    @property
    def fn(self) -> int:
        return self._total("fn")

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.recall)

    @property
    def token_accuracy(self) -> float:
        return _ratio(self.token_correct, self.token_total)

    def to_dict(self, config: dict | None = None) -> dict:
        per_label = {}
        for label in sorted(self.per_label):
            c = self.per_label[label]
            p, r = _ratio(c["tp"], c["tp"] + c["fp"]), _ratio(c["tp"], c["tp"] + c["fn"])
            per_label[label] = {**c, "precision": p, "recall": r, "f1": _f1(p, r)}
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "token_accuracy": self.token_accuracy,
            "per_label": per_label,
            "config": {"matching": MATCHING, "average": "micro", **(config or {})},
        }

    def to_json(self, config: dict | None = None) -> str:
        return json.dumps(self.to_dict(config), indent=2, sort_keys=True)

    def report(self) -> str:
        lines = [f"{'label':<12} {'prec':>7} {'rec':>7} {'f1':>7} {'tp':>6} {'fp':>6} {'fn':>6}"]
        for label, row in self.to_dict()["per_label"].items():
            lines.append(f"{label:<12} {row['precision']:7.4f} {row['recall']:7.4f} {row['f1']:7.4f} "
                         f"{row['tp']:6d} {row['fp']:6d} {row['fn']:6d}")
        lines.append(f"{'micro':<12} {self.precision:7.4f} {self.recall:7.4f} {self.f1:7.4f} "
                     f"{self.tp:6d} {self.fp:6d} {self.fn:6d}")
        lines.append(f"token accuracy {self.token_accuracy:.4f} ({MATCHING} matching, micro average)")
        return "\n".join(lines)


def _ratio(num, den) -> float:
    # 0/0 is reported as 0
    return num / den if den else 0.0


def _f1(p, r) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def evaluate(gold: Iterable[Sequence[str]], predicted: Iterable[Sequence[str]]) -> Metrics:
    """Exact-match entity evaluation over parallel tag sequences."""
    gold, predicted = list(gold), list(predicted)
    if len(gold) != len(predicted):
        raise ContractError(f"{len(gold)} gold sequences but {len(predicted)} predicted")
    m = Metrics()
    for n, (g, p) in enumerate(zip(gold, predicted)):
        if len(g) != len(p):
            raise ContractError(f"sequence {n}: gold length {len(g)} != predicted length {len(p)}")
        m.token_total += len(g)
        m.token_correct += sum(a == b for a, b in zip(g, p))
        gs, ps = set(bio_decode(g)), set(bio_decode(p))
        for span in gs & ps:
            m.add(span.label, "tp")
        for span in ps - gs:
            m.add(span.label, "fp")
        for span in gs - ps:
            m.add(span.label, "fn")
    return m


def kfold_split(documents: Sequence, folds: int = 10, seed: int = 0) -> list[int]:
    """Fold id for each document; fold sizes differ by at most one.

    Splitting is by document so no document contributes to both sides.
    """
    n_documents = len(documents)
    if folds < 2:
        raise ContractError("need at least 2 folds")
    if folds > n_documents:
        raise ContractError(f"{folds} folds but only {n_documents} documents")
    order = Rng(seed).child("kfold").permutation(n_documents)
    assignment = [0] * n_documents
    for rank, doc in enumerate(order):
        assignment[int(doc)] = rank % folds
    return assignment


def fold_partitions(items: Sequence, folds: int = 10, seed: int = 0):
    """Yield ``(train_items, test_items)`` for each fold."""
    assignment = kfold_split(items, folds, seed)
    for k in range(folds):
        yield ([x for x, a in zip(items, assignment) if a != k],
               [x for x, a in zip(items, assignment) if a == k])
