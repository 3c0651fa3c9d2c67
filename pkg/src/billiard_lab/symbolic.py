"""Symbol sequences over obstacle ids: words, palindromes, heteroclinic codes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Sequence


class SymbolError(ValueError):
    pass


def _fmt(symbols):
    if all(0 <= s < 10 for s in symbols):
        return "".join(str(s) for s in symbols)
    return "-".join(str(s) for s in symbols)


@dataclass(frozen=True)
class Word:
    symbols: tuple
    marked: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))

    @classmethod
    def parse(cls, text) -> "Word":
        if isinstance(text, Word):
            return text
        if not isinstance(text, str):
            return cls(tuple(text))
        text = text.strip()
        if not text:
            raise SymbolError("empty word")
        parts = text.split("-") if "-" in text else list(text)
        try:
            return cls(tuple(int(p) for p in parts))
        except ValueError:
            raise SymbolError(f"cannot parse word {text!r}") from None

    def __str__(self):
        return _fmt(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def __iter__(self):
        return iter(self.symbols)

    def rotated(self, k) -> "Word":
        k %= len(self.symbols)
        return Word(self.symbols[k:] + self.symbols[:k])

    def reversed(self) -> "Word":
        return Word(self.symbols[::-1])

    def power(self, k) -> "Word":
        return Word(self.symbols * k)

    def necklace(self) -> "Word":
        """Lexicographically minimal rotation."""
        n = len(self.symbols)
        return min((self.rotated(k) for k in range(n)), key=lambda w: w.symbols)

    def primitive_root(self) -> tuple:
        """(u, k) with self = u^k and k maximal."""
        n = len(self.symbols)
        for d in range(1, n + 1):
            if n % d == 0 and self.symbols[:d] * (n // d) == self.symbols:
                return Word(self.symbols[:d]), n // d
        raise AssertionError

    def is_primitive(self):
        return self.primitive_root()[1] == 1

    def relabeled(self, mapping) -> "Word":
        return Word(tuple(mapping[s] for s in self.symbols))


def is_admissible(word, periodic: bool = False) -> bool:
    sym = Word.parse(word).symbols
    if any(a == b for a, b in zip(sym, sym[1:])):
        return False
    if periodic and len(sym) > 1 and sym[0] == sym[-1]:
        return False
    if periodic and len(sym) == 1:
        return False
    return True


def require_admissible(word, periodic: bool = False) -> Word:
    w = Word.parse(word)
    if not is_admissible(w, periodic):
        raise SymbolError(f"inadmissible word {w}")
    return w


@dataclass(frozen=True)
class PalindromeCheck:
    palindromic: bool
    depth: int

    def __bool__(self):
        return self.palindromic


def is_palindromic_at(window: Sequence[int], center: int) -> PalindromeCheck:
    """Mirror symmetry of a finite window around `center`.

    depth is the number of mirrored pairs that were checked and matched
    (for a failure: the offset of the first mismatch minus one).
    """
    sym = Word.parse(window).symbols if not isinstance(window, (list, tuple)) else tuple(window)
    if len(sym) < 3:
        raise SymbolError("window too short to certify a palindrome")
    if not 0 <= center < len(sym):
        raise SymbolError("center outside the window")
    reach = min(center, len(sym) - 1 - center)
    for j in range(1, reach + 1):
        if sym[center + j] != sym[center - j]:
            return PalindromeCheck(False, j - 1)
    return PalindromeCheck(True, reach)


def periodic_window(word, center: int, half: int) -> tuple:
    """Symbols at positions center-half .. center+half of the periodic word."""
    sym = Word.parse(word).symbols
    return tuple(sym[(center + j) % len(sym)] for j in range(-half, half + 1))


def enumerate_words(alphabet, max_length: int, periodic: bool = True, necklaces: bool = False,
                    primitive: bool = False, min_length: int = 2) -> Iterator[Word]:
    """Admissible words ordered by length, then lexicographically."""
    if max_length < 2:
        raise SymbolError("max length must be at least 2")
    alphabet = sorted(int(a) for a in alphabet)
    for n in range(min_length, max_length + 1):
        stack = [(a,) for a in reversed(alphabet)]
        while stack:
            w = stack.pop()
            if len(w) == n:
                if periodic and w[0] == w[-1]:
                    continue
                word = Word(w)
                if necklaces and word.necklace().symbols != w:
                    continue
                if primitive and not word.is_primitive():
                    continue
                yield word
                continue
            for a in reversed(alphabet):
                if a != w[-1]:
                    stack.append(w + (a,))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeteroclinicCode:
    """Bi-infinite sequence: past periodic word, finite block, future periodic word.

    Position 0 is block[center].  Position -1 is past[-1]; position
    len(block) - center is future[0].
    """

    past: Word
    block: tuple
    center: int
    future: Word

    def __post_init__(self):
        object.__setattr__(self, "past", Word.parse(self.past))
        object.__setattr__(self, "future", Word.parse(self.future))
        object.__setattr__(self, "block", tuple(int(s) for s in self.block))
        if not 0 <= self.center < len(self.block):
            raise SymbolError("center must index the block")
        if not (is_admissible(self.past, True) and is_admissible(self.future, True)):
            raise SymbolError("flanking words must be admissible periodic words")
        seq = (self.past[-1],) + self.block + (self.future[0],)
        if not is_admissible(seq):
            raise SymbolError("inadmissible splice")

    @classmethod
    def periodic(cls, word, index: int = 0) -> "HeteroclinicCode":
        """Code of the point of a periodic orbit at position `index` of its word."""
        w = require_admissible(word, periodic=True)
        p = len(w)
        return cls(w.rotated(index), (w[index % p],), 0, w.rotated(index + 1))

    def symbol(self, j: int) -> int:
        i = self.center + j
        nb = len(self.block)
        if i < 0:
            return self.past[i % len(self.past)]
        if i >= nb:
            return self.future[(i - nb) % len(self.future)]
        return self.block[i]

    def window(self, lo: int, hi: int) -> tuple:
        """Symbols at positions lo..hi inclusive."""
        return tuple(self.symbol(j) for j in range(lo, hi + 1))

    @property
    def future_start(self):
        """First position from which the sequence is purely the future word."""
        return len(self.block) - self.center

    @property
    def past_end(self):
        """Last position up to which the sequence is purely the past word."""
        return -self.center - 1

    def shifted(self, k: int) -> "HeteroclinicCode":
        """Code of F^k of the point (the sequence read from position k)."""
        lo = min(self.past_end + 1, k)
        hi = max(self.future_start, k + 1)
        past = Word(self.window(lo - len(self.past), lo - 1))
        future = Word(self.window(hi, hi + len(self.future) - 1))
        return HeteroclinicCode(past, self.window(lo, hi - 1), k - lo, future)

    def agrees(self, other: "HeteroclinicCode", lo: int, hi: int) -> bool:
        return self.window(lo, hi) == other.window(lo, hi)

    def same_future(self, other: "HeteroclinicCode", depth: int = 200) -> bool:
        return self.agrees(other, 0, depth)

    def same_past(self, other: "HeteroclinicCode", depth: int = 200) -> bool:
        return self.agrees(other, -depth, 0)

    def reversed(self) -> "HeteroclinicCode":
        """Code of the time-reversed point: symbol(j) -> symbol(-j)."""
        return HeteroclinicCode(
            self.future.reversed(), self.block[::-1], len(self.block) - 1 - self.center,
            self.past.reversed())

    def relabeled(self, mapping) -> "HeteroclinicCode":
        return HeteroclinicCode(self.past.relabeled(mapping), tuple(mapping[s] for s in self.block),
                                self.center, self.future.relabeled(mapping))

    def __str__(self):
        return f"...({self.past})[{_fmt(self.block[:self.center])}<{self.block[self.center]}>" \
               f"{_fmt(self.block[self.center + 1:])}]({self.future})..."


def bracket(x: HeteroclinicCode, y: HeteroclinicCode) -> HeteroclinicCode:
    """Point with the future of x and the past of y (same center symbol required)."""
    c = x.block[x.center]
    if y.block[y.center] != c:
        raise SymbolError("bracket needs a common center symbol")
    block = y.block[:y.center] + (c,) + x.block[x.center + 1:]
    return HeteroclinicCode(y.past, block, y.center, x.future)


def bridge_word(c1: HeteroclinicCode, c3: HeteroclinicCode, n: int) -> Word:
    """Periodic word shadowing c1 on [-2n, 2n] and then c3 on [-2n+1, 2n+1].

    With 2-periodic flanks this gives 2 + 8n bounces: the orbit spends about
    2n visits near each of the two anchor orbits between the two corners.
    """
    if n < 0:
        raise SymbolError("n must be non-negative")
    w = c1.window(-2 * n, 2 * n) + c3.window(-2 * n + 1, 2 * n + 1)
    if not is_admissible(w, periodic=True):
        raise SymbolError(f"inadmissible splice for n={n}")
    return Word(w)
