"""Tagged character alphabet: symbol/index tables and entity markup conversion.

Transcripts carry named entities inline as single-character markers: one
start symbol per category ('|' person, '$' location, '{' organization) and a
shared ']' end symbol.  The bracket form ``[PER ...]`` used by annotation
tools converts to and from this symbol form losslessly.
"""

import json
import string
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

BLANK_TOKEN = "<blank>"
CATEGORIES = ("PER", "LOC", "ORG")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a checksum."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _FNV_MASK
    return h


class UnknownSymbol(ValueError):
    """A character of the input is absent from the alphabet."""

    def __init__(self, position: int, char: str):
        super().__init__(
            "character %r at position %d is not in the alphabet" % (char, position)
        )
        self.position = position
        self.char = char

    def __reduce__(self):
        return (UnknownSymbol, (self.position, self.char))


class IndexOutOfRange(ValueError):
    """An index does not address an alphabet entry."""


class BlankInText(ValueError):
    """The blank index appeared in a label sequence being decoded to text."""


class MalformedBracket(ValueError):
    """Bracket annotation is unclosed, unopened or names an unknown category."""


class NestedSpan(ValueError):
    """Bracket annotation opens a span inside another span."""


class HalfLabeled(ValueError):
    """An entity start symbol without its end, or an end without a start."""

    def __init__(self, position: int, message: Optional[str] = None):
        super().__init__(message or "half-labeled tag at position %d" % position)
        self.position = position

    def __reduce__(self):
        return (HalfLabeled, (self.position,))


@dataclass(frozen=True)
class TagScheme:
    """Entity markup symbols: one start character per category plus the shared end."""

    start_symbols: Dict[str, str] = field(
        default_factory=lambda: {"PER": "|", "LOC": "$", "ORG": "{"}
    )
    end_symbol: str = "]"

    def __post_init__(self):
        starts = list(self.start_symbols.values())
        if len(set(starts)) != len(starts):
            raise ValueError("start symbols must be pairwise distinct")
        if self.end_symbol in starts:
            raise ValueError("end symbol collides with a start symbol")
        for sym in starts + [self.end_symbol]:
            if len(sym) != 1:
                raise ValueError("tag symbols must be single characters: %r" % sym)

    def category_of(self, char: str) -> Optional[str]:
        """Category whose start symbol is `char`, or None."""
        for cat, sym in self.start_symbols.items():
            if sym == char:
                return cat
        return None

    @property
    def tag_characters(self) -> frozenset:
        return frozenset(self.start_symbols.values()) | {self.end_symbol}


class Alphabet:
    """Bijective symbol<->index table with a dedicated CTC blank entry.

    ``symbols[blank_index]`` holds the reserved literal ``"<blank>"``; every
    other entry is a distinct single character.  Instances are immutable
    after construction and safe to share across threads.
    """

    def __init__(
        self,
        symbols: Sequence[str],
        blank_index: int = 0,
        tag_scheme: Optional[TagScheme] = None,
    ):
        symbols = list(symbols)
        if not symbols:
            raise ValueError("alphabet must not be empty")
        if not 0 <= blank_index < len(symbols):
            raise ValueError("blank_index %d out of range" % blank_index)
        if symbols[blank_index] != BLANK_TOKEN:
            raise ValueError(
                "entry at blank_index must be the reserved %r literal" % BLANK_TOKEN
            )
        for i, sym in enumerate(symbols):
            if i == blank_index:
                continue
            if len(sym) != 1:
                raise ValueError("symbol at index %d is not a single character: %r" % (i, sym))
        if len(set(symbols)) != len(symbols):
            raise ValueError("alphabet symbols must be distinct")
        if tag_scheme is not None:
            missing = [c for c in sorted(tag_scheme.tag_characters) if c not in symbols]
            if missing:
                raise ValueError("tag symbols %r missing from the alphabet" % missing)
        self.symbols: List[str] = symbols
        self.blank_index = blank_index
        self.tag_scheme = tag_scheme
        self._index: Dict[str, int] = {
            s: i for i, s in enumerate(symbols) if i != blank_index
        }

    @classmethod
    def default(cls) -> "Alphabet":
        """The standard 32-entry alphabet: blank, A-Z, space and the four tag symbols."""
        symbols = [BLANK_TOKEN] + list(string.ascii_uppercase) + [" ", "|", "$", "{", "]"]
        return cls(symbols, blank_index=0, tag_scheme=TagScheme())

    @classmethod
    def from_text_symbols(
        cls, chars: Iterable[str], tag_scheme: Optional[TagScheme] = None
    ) -> "Alphabet":
        """Alphabet with blank at index 0 followed by `chars` in the given order."""
        return cls([BLANK_TOKEN] + list(chars), blank_index=0, tag_scheme=tag_scheme)

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Alphabet)
            and self.symbols == other.symbols
            and self.blank_index == other.blank_index
            and self.tag_scheme == other.tag_scheme
        )

    def index(self, char: str) -> int:
        try:
            return self._index[char]
        except KeyError:
            raise UnknownSymbol(0, char) from None

    def symbol(self, index: int) -> str:
        if not 0 <= index < len(self.symbols):
            raise IndexOutOfRange("index %d out of range for alphabet of size %d"
                                  % (index, len(self.symbols)))
        return self.symbols[index]

    def encode(self, text: str) -> List[int]:
        """Map text to indices.  Input is uppercased first."""
        out = []
        for pos, ch in enumerate(text.upper()):
            idx = self._index.get(ch)
            if idx is None:
                raise UnknownSymbol(pos, ch)
            out.append(idx)
        return out

    def decode(self, indices: Sequence[int]) -> str:
        """Inverse of encode.  Rejects the blank index and anything out of range."""
        out = []
        for idx in indices:
            if not 0 <= idx < len(self.symbols):
                raise IndexOutOfRange("index %d out of range" % idx)
            if idx == self.blank_index:
                raise BlankInText("blank index %d is not a text symbol" % idx)
            out.append(self.symbols[idx])
        return "".join(out)

    # ------------------------------------------------------------------
    # JSON interchange.  The canonical serialization (sorted keys, no
    # whitespace) is what the posteriorgram checksum binds to, so files
    # produced from equal alphabets always match regardless of formatting.
    # ------------------------------------------------------------------

    def to_json_dict(self) -> dict:
        tags = None
        if self.tag_scheme is not None:
            tags = dict(self.tag_scheme.start_symbols)
            tags["end"] = self.tag_scheme.end_symbol
        return {"symbols": list(self.symbols), "blank_index": self.blank_index, "tags": tags}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Alphabet":
        tags = obj.get("tags")
        scheme = None
        if tags is not None:
            starts = {k: v for k, v in tags.items() if k != "end"}
            scheme = TagScheme(start_symbols=starts, end_symbol=tags["end"])
        return cls(obj["symbols"], blank_index=obj["blank_index"], tag_scheme=scheme)

    def canonical_json(self) -> bytes:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    @property
    def checksum(self) -> int:
        return fnv1a64(self.canonical_json())

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Alphabet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def tag_map(bracket_text: str, scheme: TagScheme) -> str:
    """Convert ``[CAT ...]`` bracket spans to start/end symbol markup.

    Spans must be flat; nesting raises NestedSpan and an unclosed span, a
    stray ']' or an unknown category raises MalformedBracket.
    """
    out = []
    open_at = -1
    i = 0
    n = len(bracket_text)
    while i < n:
        ch = bracket_text[i]
        if ch == "[":
            cat = None
            for name in scheme.start_symbols:
                if bracket_text.startswith(name + " ", i + 1):
                    cat = name
                    break
            if cat is None:
                raise MalformedBracket("unknown or malformed category at position %d" % i)
            if open_at >= 0:
                raise NestedSpan("span opened at %d inside span opened at %d" % (i, open_at))
            out.append(scheme.start_symbols[cat])
            open_at = i
            i += len(cat) + 2
        elif ch == scheme.end_symbol:
            if open_at < 0:
                raise MalformedBracket("unopened %r at position %d" % (ch, i))
            out.append(ch)
            open_at = -1
            i += 1
        else:
            out.append(ch)
            i += 1
    if open_at >= 0:
        raise MalformedBracket("span opened at %d is never closed" % open_at)
    return "".join(out)


def tag_unmap(symbol_text: str, scheme: TagScheme) -> str:
    """Convert symbol markup back to ``[CAT ...]`` brackets (strict: no half labels)."""
    out = []
    open_at = -1
    for i, ch in enumerate(symbol_text):
        cat = scheme.category_of(ch)
        if cat is not None:
            if open_at >= 0:
                raise HalfLabeled(open_at)
            out.append("[" + cat + " ")
            open_at = i
        elif ch == scheme.end_symbol:
            if open_at < 0:
                raise HalfLabeled(i)
            out.append("]")
            open_at = -1
        else:
            out.append(ch)
    if open_at >= 0:
        raise HalfLabeled(open_at)
    return "".join(out)


def strip_tags(symbol_text: str, scheme: TagScheme) -> str:
    """Remove tag symbols wherever they occur; all other characters kept in order."""
    tags = scheme.tag_characters
    return "".join(ch for ch in symbol_text if ch not in tags)
