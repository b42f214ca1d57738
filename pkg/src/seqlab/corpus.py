"""Labeled corpora: a two-column CoNLL dialect, sequencing, synthetic data.

File format (UTF-8, LF or CRLF on read, LF on write)::

    token<TAB>tag        one token per line, tag is O, B-x or I-x
    <blank line>         ends a sentence
    -DOCSTART-           ends a document

Tokens may not contain spaces or tabs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ContractError, DataFormatError
from .numerics import Rng
from .vocab import check_tag

DOCSTART = "-DOCSTART-"


@dataclass(frozen=True)
class TaggedSequence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags):
            raise ContractError(f"{len(self.tokens)} tokens but {len(self.tags)} tags")

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[TaggedSequence, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        for s in self.sentences:
            if len(s) == 0:
                raise ContractError(f"document {self.id!r} contains an empty sentence")


def _doc_id(n: int) -> str:
    return f"doc{n:05d}"


def load_conll(path, allow_untagged: bool = False) -> list[Document]:
    """Parse a CoNLL file into documents.

    With ``allow_untagged`` a line holding only a token is accepted and
    tagged ``O``; ``predict`` uses this for raw token input.
    """
    docs: list[Document] = []
    sentences: list[TaggedSequence] = []
    tokens: list[str] = []
    tags: list[str] = []

    def end_sentence():
        if tokens:
            sentences.append(TaggedSequence(tuple(tokens), tuple(tags)))
            tokens.clear()
            tags.clear()

    def end_document():
        end_sentence()
        if sentences:
            docs.append(Document(_doc_id(len(docs)), tuple(sentences)))
            sentences.clear()

    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if line == "":
                end_sentence()
                continue
            if line.startswith(DOCSTART):
                end_document()
                continue
            parts = line.split("\t")
            if len(parts) == 1 and allow_untagged:
                parts = [parts[0], "O"]
            if len(parts) != 2 or not parts[0]:
                raise DataFormatError("expected 'token<TAB>tag'", line=lineno, path=path)
            tok, tag = parts
            if any(ch.isspace() for ch in tok):
                raise DataFormatError(f"token {tok!r} contains whitespace", line=lineno, path=path)
            try:
                check_tag(tag)
            except DataFormatError as exc:
                raise DataFormatError(str(exc), line=lineno, path=path) from None
            tokens.append(tok)
            tags.append(tag)
    end_document()
    return docs


def format_conll(docs: Sequence[Document]) -> str:
    chunks = []
    for n, doc in enumerate(docs):
        if n:
            chunks.append(DOCSTART + "\n")
        for sent in doc.sentences:
            chunks.extend(f"{tok}\t{tag}\n" for tok, tag in zip(sent.tokens, sent.tags))
            chunks.append("\n")
    return "".join(chunks)


def save_conll(docs: Sequence[Document], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_conll(docs))


def to_sequences(docs: Iterable[Document], unit: str = "sentence") -> list[TaggedSequence]:
    """Sentence mode: one sequence per sentence.  Document mode: one per
    document, sentences concatenated with no boundary marker."""
    if unit == "sentence":
        return [s for d in docs for s in d.sentences]
    if unit == "document":
        out = []
        for d in docs:
            if not d.sentences:
                continue
            out.append(TaggedSequence(
                tuple(t for s in d.sentences for t in s.tokens),
                tuple(t for s in d.sentences for t in s.tags),
            ))
        return out
    raise ContractError(f"unit must be 'sentence' or 'document', got {unit!r}")


def read_text_corpus(path) -> list[list[str]]:
    """Plain text, one sentence per line, whitespace tokens, lowercased."""
    with open(path, "r", encoding="utf-8") as fh:
        return [line.lower().split() for line in fh if line.strip()]


# ----------------------------------------------------------- synthetic data
#
# Entity types and lexicons are an acceptance-harness choice.  In every
# profile, local entities are fully determined by their own tokens.  The
# ambiguous tokens in ``longdep`` / ``docdep`` take the type of a trigger
# word that appears earlier (same sentence, or the previous sentence).

ENTITY_TYPES = ("Drug", "Dose", "Route", "Freq")

LEXICON = {
    "Drug": [["aspirin"], ["heparin"], ["warfarin"], ["insulin"], ["metformin"], ["lisinopril"],
             ["vitamin", "d"], ["fish", "oil"]],
    "Dose": [["10", "mg"], ["5", "mg"], ["2", "units"], ["500", "mcg"], ["one", "tablet"]],
    "Route": [["orally"], ["iv"], ["topically"], ["subcutaneous"], ["by", "mouth"]],
    "Freq": [["daily"], ["nightly"], ["weekly"], ["every", "evening"], ["every", "morning"]],
}
TRIGGERS = {
    "Drug": ["prescribed", "started"],
    "Dose": ["titrated", "increased"],
    "Route": ["administered", "delivered"],
    "Freq": ["scheduled", "repeated"],
}
AMBIGUOUS = ["it", "this", "same"]
FILLER = ["the", "patient", "was", "and", "then", "noted", "with", "for", "a", "on", "of", "after",
          "history", "reports", "pain", "today", "no", "change", "seen", "plan", "follow", "up",
          "clinic", "stable", "mild", "symptoms", "continue", "as", "before", "review"]

# Design frequencies of entity types among all emitted entities.
PROFILE_FREQUENCIES = {
    "local": {"Drug": 0.40, "Dose": 0.25, "Route": 0.20, "Freq": 0.15},
    "longdep": {"Drug": 0.40, "Dose": 0.25, "Route": 0.20, "Freq": 0.15},
    "docdep": {"Drug": 0.40, "Dose": 0.25, "Route": 0.20, "Freq": 0.15},
}
PROFILES = tuple(PROFILE_FREQUENCIES)
SENTENCES_PER_DOC = 5
TRIGGER_GAP = (4, 8)


def _pick(rng: Rng, items):
    return items[int(rng.integers(len(items)))]


def _entity_type(rng: Rng, profile: str) -> str:
    freqs = PROFILE_FREQUENCIES[profile]
    return ENTITY_TYPES[int(rng.choice(len(ENTITY_TYPES), p=[freqs[t] for t in ENTITY_TYPES]))]


def _local_sentence(rng: Rng, profile: str, length: int, n_entities: int):
    """Filler of ``length`` tokens with ``n_entities`` local entities inserted."""
    tokens = [_pick(rng, FILLER) for _ in range(length)]
    tags = ["O"] * length
    for _ in range(n_entities):
        etype = _entity_type(rng, profile)
        words = _pick(rng, LEXICON[etype])
        at = int(rng.integers(len(tokens) + 1))
        # keep entities from splitting one another
        while at < len(tags) and tags[at].startswith("I-"):
            at += 1
        tokens[at:at] = words
        tags[at:at] = [f"B-{etype}"] + [f"I-{etype}"] * (len(words) - 1)
    return tokens, tags


def _longdep_sentence(rng: Rng, profile: str):
    etype = _entity_type(rng, profile)
    gap = int(rng.integers(TRIGGER_GAP[0], TRIGGER_GAP[1] + 1))
    lead = int(rng.integers(0, 3))
    tail = int(rng.integers(0, 3))
    tokens = [_pick(rng, FILLER) for _ in range(lead)]
    tokens.append(_pick(rng, TRIGGERS[etype]))
    tokens += [_pick(rng, FILLER) for _ in range(gap - 1)]
    tokens.append(_pick(rng, AMBIGUOUS))
    tokens += [_pick(rng, FILLER) for _ in range(tail)]
    tags = ["O"] * len(tokens)
    amb_at = lead + gap
    tags[amb_at] = f"B-{etype}"
    # one local entity, placed strictly between trigger and ambiguous token
    # or after the ambiguous token, never splitting the pair's distance rule
    local_type = _entity_type(rng, profile)
    words = _pick(rng, LEXICON[local_type])
    at = amb_at + 1 + int(rng.integers(0, tail + 1))
    tokens[at:at] = words
    tags[at:at] = [f"B-{local_type}"] + [f"I-{local_type}"] * (len(words) - 1)
    return tokens, tags


def gen_synthetic(profile: str, sentences: int, seed: int) -> list[Document]:
    """Deterministic synthetic corpus, grouped into documents of five sentences.

    ``local``    entity types follow from the tokens themselves.
    ``longdep``  each sentence holds one trigger word and, 4-8 tokens later,
                 one ambiguous token whose type is the trigger's; plus one
                 local entity after the ambiguous token.
    ``docdep``   sentences come in pairs: a cue sentence holding only a
                 trigger, then a sentence whose ambiguous token takes the
                 trigger's type.  Only a model that reads across the sentence
                 boundary can type the ambiguous token.
    """
    if profile not in PROFILES:
        raise ContractError(f"profile must be one of {PROFILES}, got {profile!r}")
    if sentences < 1:
        raise ContractError("sentences must be >= 1")
    rng = Rng(seed).child(f"synth/{profile}")
    sents: list[TaggedSequence] = []
    if profile == "local":
        for _ in range(sentences):
            toks, tags = _local_sentence(rng, profile, int(rng.integers(3, 9)), int(rng.integers(1, 3)))
            sents.append(TaggedSequence(toks, tags))
    elif profile == "longdep":
        for _ in range(sentences):
            toks, tags = _longdep_sentence(rng, profile)
            sents.append(TaggedSequence(toks, tags))
    else:
        while len(sents) < sentences:
            etype = _entity_type(rng, profile)
            cue = [_pick(rng, FILLER) for _ in range(int(rng.integers(1, 3)))]
            cue.append(_pick(rng, TRIGGERS[etype]))
            sents.append(TaggedSequence(cue, ["O"] * len(cue)))
            if len(sents) == sentences:
                break
            lead = int(rng.integers(0, 3))
            toks = [_pick(rng, FILLER) for _ in range(lead)] + [_pick(rng, AMBIGUOUS)]
            tags = ["O"] * lead + [f"B-{etype}"]
            toks.append(_pick(rng, FILLER))
            tags.append("O")
            sents.append(TaggedSequence(toks, tags))
    per_doc = SENTENCES_PER_DOC + (1 if profile == "docdep" else 0)
    return [Document(_doc_id(n), tuple(sents[i:i + per_doc]))
            for n, i in enumerate(range(0, len(sents), per_doc))]
