"""Token and tag index maps."""
from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

from .errors import ContractError, DataFormatError

UNK = "<unk>"


class Vocabulary:
    """Bidirectional token <-> index map.

    With ``unk`` set (the default) index 0 is reserved for unknown tokens and
    ``index`` never fails.  ``unk=None`` gives a closed vocabulary, which is
    what embedding files use.
    """

    def __init__(self, tokens: Iterable[str] = (), unk: str | None = UNK):
        self.unk = unk
        self._tokens: list[str] = []
        self._index: dict[str, int] = {}
        if unk is not None:
            self._add(unk)
        for tok in tokens:
            if tok not in self._index:
                self._add(tok)

    def _add(self, tok: str) -> None:
        self._index[tok] = len(self._tokens)
        self._tokens.append(tok)

    @classmethod
    def build(cls, tokens: Iterable[str], min_count: int = 1, unk: str | None = UNK) -> "Vocabulary":
        """Frequency-ordered vocabulary (ties broken alphabetically)."""
        counts = Counter(tokens)
        kept = sorted((t for t, c in counts.items() if c >= min_count and t != unk),
                      key=lambda t: (-counts[t], t))
        return cls(kept, unk=unk)

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    @property
    def unk_id(self) -> int | None:
        return None if self.unk is None else self._index[self.unk]

    def index(self, token: str) -> int:
        i = self._index.get(token)
        if i is not None:
            return i
        if self.unk is None:
            raise KeyError(token)
        return self._index[self.unk]

    def ids(self, tokens: Sequence[str]) -> list[int]:
        return [self.index(t) for t in tokens]

    def token(self, i: int) -> str:
        return self._tokens[i]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self._tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.unk == other.unk and self._tokens == other._tokens

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)}, unk={self.unk!r})"


def check_tag(tag: str) -> None:
    if tag == "O":
        return
    if len(tag) > 2 and tag[0] in "BI" and tag[1] == "-" and not any(c.isspace() for c in tag):
        return
    raise DataFormatError(f"tag {tag!r} is not O, B-x or I-x")


class TagSet:
    """Closed tag <-> index map; ``O`` is always index 0 when present."""

    def __init__(self, tags: Iterable[str]):
        self._tags: list[str] = []
        self._index: dict[str, int] = {}
        for t in tags:
            check_tag(t)
            if t not in self._index:
                self._index[t] = len(self._tags)
                self._tags.append(t)

    @classmethod
    def build(cls, tags: Iterable[str]) -> "TagSet":
        seen = set(tags)
        seen.add("O")
        rest = sorted(seen - {"O"}, key=lambda t: (t[2:], t[0]))
        return cls(["O"] + rest)

    @property
    def tags(self) -> list[str]:
        return list(self._tags)

    def index(self, tag: str) -> int:
        try:
            return self._index[tag]
        except KeyError:
            raise ContractError(f"tag {tag!r} not in tagset") from None

    def ids(self, tags: Sequence[str]) -> list[int]:
        return [self.index(t) for t in tags]

    def tag(self, i: int) -> str:
        return self._tags[i]

    def __contains__(self, tag: str) -> bool:
        return tag in self._index

    def __len__(self) -> int:
        return len(self._tags)

    def __eq__(self, other) -> bool:
        return isinstance(other, TagSet) and self._tags == other._tags

    def __repr__(self) -> str:
        return f"TagSet({self._tags!r})"
