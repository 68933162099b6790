"""Exact polynomial superalgebra over ordered bosonic/fermionic coordinates.

Values are finite rational-weighted sums of canonical monomials
theta_{j1}*...*theta_{jk} * x^e with j1 < ... < jk.  All arithmetic is
exact; zero coefficients are never stored, so equality is equality of
canonical term maps.  Left and right fermionic derivatives differ only
by sign: on a monomial holding k Grassmann factors with the target at
0-based position p, the left derivative carries (-1)^p and the right
one (-1)^(k-1-p).

Representation: a term map dict[int, int] plus one positive shared
denominator.  A key packs the bosonic exponent vector (32 bits per
coordinate) above a q-bit Grassmann membership mask, so monomial
multiplication is integer addition plus a disjointness test.  The
coefficient of key k is Fraction(terms[k], den).
"""

from __future__ import annotations

import enum
import math
from fractions import Fraction
from typing import Iterable, Iterator

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

_EXP_BITS = 32
_EXP_MAX = (1 << _EXP_BITS) - 1
_POW_LIMIT = 1 << 20  # per-variable degrees stay far below the field width


def _mix64(z: int) -> int:
    # SplitMix64 finalizer (Steele/Lea/Flood); full-period 64-bit mixer.
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Deterministic 64-bit generator; identical streams on every platform."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix64(self._state)

    def next_below(self, n: int) -> int:
        assert n > 0
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.next_below(len(seq))]


def derive_seed(master: int, *parts: int) -> int:
    """Fold trial/slot indices into a master seed, order-sensitively."""
    state = master & _MASK64
    for p in parts:
        state = _mix64((state + _GOLDEN) ^ (p & _MASK64))
    return state


class Side(enum.Enum):
    LEFT = "L"
    RIGHT = "R"


class Parity(enum.Enum):
    EVEN = 0
    ODD = 1
    MIXED = "mixed"
    ZERO = "zero"  # the zero element is homogeneous of either parity


class SpaceMismatchError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class GradedSpace:
    """Ordered coordinate list; each coordinate bosonic (0) or fermionic (1)."""

    __slots__ = ("coords", "_index", "_bos", "_ferm", "_sub", "q", "p", "_fmask")

    def __init__(self, coords: Iterable[tuple[str, int]]):
        coords = tuple((str(n), int(p)) for n, p in coords)
        if not coords:
            raise ValueError("space needs at least one coordinate")
        names = [n for n, _ in coords]
        if len(set(names)) != len(names):
            raise ValueError("duplicate coordinate name")
        for n, p in coords:
            if p not in (0, 1):
                raise ValueError(f"parity of {n!r} must be 0 or 1")
            if not n or not (n[0].isalpha() or n[0] == "_") or not all(
                c.isalnum() or c == "_" for c in n
            ):
                raise ValueError(f"bad coordinate name {n!r}")
        self.coords = coords
        self._index = {n: i for i, (n, _) in enumerate(coords)}
        self._bos = tuple(i for i, (_, p) in enumerate(coords) if p == 0)
        self._ferm = tuple(i for i, (_, p) in enumerate(coords) if p == 1)
        self.p = len(self._bos)
        self.q = len(self._ferm)
        self._fmask = (1 << self.q) - 1
        # coordinate index -> position within its own (bosonic|fermionic) block
        self._sub = {}
        for k, i in enumerate(self._bos):
            self._sub[i] = k
        for k, i in enumerate(self._ferm):
            self._sub[i] = k

    @classmethod
    def from_declaration(cls, text: str) -> "GradedSpace":
        """Parse 'x1:b,x2:b,th:f' (b bosonic, f fermionic)."""
        coords = []
        for piece in text.split(","):
            piece = piece.strip()
            if not piece:
                raise ValueError("empty coordinate declaration")
            name, sep, kind = piece.partition(":")
            if not sep or kind.strip() not in ("b", "f"):
                raise ValueError(f"expected 'name:b' or 'name:f', got {piece!r}")
            coords.append((name.strip(), 0 if kind.strip() == "b" else 1))
        return cls(coords)

    def declaration(self) -> str:
        return ",".join(f"{n}:{'bf'[p]}" for n, p in self.coords)

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.coords)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown coordinate {name!r}") from None

    def coordinate_parity(self, name: str) -> int:
        return self.coords[self.index(name)][1]

    # -- packed monomial keys ------------------------------------------

    def pack_key(self, mask: int, exps: tuple[int, ...]) -> int:
        if len(exps) != self.p:
            raise ValueError(f"expected {self.p} bosonic exponents")
        if not 0 <= mask <= self._fmask:
            raise ValueError("fermionic mask out of range")
        packed = 0
        for k, e in enumerate(exps):
            if not 0 <= e <= _EXP_MAX:
                raise ValueError("bosonic exponent out of range")
            packed |= e << (_EXP_BITS * k)
        return (packed << self.q) | mask

    def unpack_key(self, key: int) -> tuple[int, tuple[int, ...]]:
        mask = key & self._fmask
        packed = key >> self.q
        exps = tuple((packed >> (_EXP_BITS * k)) & _EXP_MAX for k in range(self.p))
        return mask, exps

    def __eq__(self, other) -> bool:
        return isinstance(other, GradedSpace) and self.coords == other.coords

    def __hash__(self) -> int:
        return hash(self.coords)

    def __repr__(self) -> str:
        return f"GradedSpace({self.declaration()!r})"

    # -- constructors ---------------------------------------------------

    def zero(self) -> "Supernumber":
        return Supernumber._make(self, {}, 1)

    def one(self) -> "Supernumber":
        return self.constant(1)

    def constant(self, c) -> "Supernumber":
        c = Fraction(c)
        if not c:
            return self.zero()
        return Supernumber._make(self, {0: c.numerator}, c.denominator)

    def coordinate(self, name: str) -> "Supernumber":
        i = self.index(name)
        if self.coords[i][1] == 0:
            key = 1 << (_EXP_BITS * self._sub[i] + self.q)
        else:
            key = 1 << self._sub[i]
        return Supernumber._make(self, {key: 1}, 1)

    def coordinates(self) -> list["Supernumber"]:
        return [self.coordinate(n) for n, _ in self.coords]

    def from_terms(self, terms: dict[tuple[int, tuple[int, ...]], object]) -> "Supernumber":
        """Build from a public {(mask, exps): rational} term map."""
        acc: dict[int, Fraction] = {}
        for (mask, exps), c in terms.items():
            key = self.pack_key(mask, tuple(exps))
            acc[key] = acc.get(key, Fraction(0)) + Fraction(c)
        den = math.lcm(*(c.denominator for c in acc.values())) if acc else 1
        return Supernumber._make(
            self, {k: int(c * den) for k, c in acc.items() if c}, den
        )

    def parse(self, text: str) -> "Supernumber":
        return _parse(self, text)


def _merge_sign(amask: int, bmask: int) -> int:
    # (-1)^inversions when the ascending factors of bmask are threaded
    # through those of amask; caller has excluded shared factors.
    inv = 0
    b = bmask
    while b:
        j = (b & -b).bit_length() - 1
        inv += (amask >> (j + 1)).bit_count()
        b &= b - 1
    return -1 if inv & 1 else 1


class Supernumber:
    """Immutable element of the polynomial superalgebra of a GradedSpace."""

    __slots__ = ("space", "_t", "_den", "_dcache")

    def __init__(self, space: GradedSpace, terms: dict | None = None):
        built = space.from_terms(terms or {})
        self.space = space
        self._t = built._t
        self._den = built._den
        self._dcache = None

    @classmethod
    def _make(cls, space: GradedSpace, terms: dict[int, int], den: int) -> "Supernumber":
        # normalize: den > 0, gcd(coefficients, den) == 1, no zero entries
        self = object.__new__(cls)
        self.space = space
        self._dcache = None
        terms = {k: v for k, v in terms.items() if v}
        if not terms:
            self._t, self._den = {}, 1
            return self
        if den < 0:
            den = -den
            terms = {k: -v for k, v in terms.items()}
        g = math.gcd(den, *terms.values())
        if g > 1:
            den //= g
            terms = {k: v // g for k, v in terms.items()}
        self._t, self._den = terms, den
        return self

    # -- structure ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._t

    def coefficient(self, mask: int, exps: tuple[int, ...]) -> Fraction:
        num = self._t.get(self.space.pack_key(mask, exps), 0)
        return Fraction(num, self._den)

    def canonical_terms(self) -> dict[tuple[int, tuple[int, ...]], Fraction]:
        """Public term map {(mask, exps): coefficient}."""
        unpack = self.space.unpack_key
        return {unpack(k): Fraction(v, self._den) for k, v in self._t.items()}

    def parity(self) -> Parity:
        if not self._t:
            return Parity.ZERO
        fmask = self.space._fmask
        seen = {(k & fmask).bit_count() & 1 for k in self._t}
        if len(seen) > 1:
            return Parity.MIXED
        return Parity.ODD if seen.pop() else Parity.EVEN

    def parity_bit(self) -> int:
        """0 or 1 for homogeneous values (zero counts as 0); error if mixed."""
        par = self.parity()
        if par is Parity.MIXED:
            raise ValueError("value has mixed parity")
        return 1 if par is Parity.ODD else 0

    def parity_decompose(self) -> tuple["Supernumber", "Supernumber"]:
        even: dict[int, int] = {}
        odd: dict[int, int] = {}
        fmask = self.space._fmask
        for k, v in self._t.items():
            ticket = odd if (k & fmask).bit_count() & 1 else even
            ticket[k] = v
        return (
            Supernumber._make(self.space, even, self._den),
            Supernumber._make(self.space, odd, self._den),
        )

    def bosonic_degree(self) -> int:
        """Max total bosonic degree over terms; -1 for the zero element."""
        if not self._t:
            return -1
        q = self.space.q
        p = self.space.p
        best = 0
        for k in self._t:
            packed = k >> q
            tot = 0
            for i in range(p):
                tot += (packed >> (_EXP_BITS * i)) & _EXP_MAX
            best = max(best, tot)
        return best

    def _check_space(self, other: "Supernumber") -> None:
        if self.space != other.space:
            raise SpaceMismatchError("operands live on different spaces")

    # -- ring operations --------------------------------------------------

    def __add__(self, other: "Supernumber") -> "Supernumber":
        if not isinstance(other, Supernumber):
            return NotImplemented
        self._check_space(other)
        da, db = self._den, other._den
        if da == db:
            terms = dict(self._t)
            for k, v in other._t.items():
                terms[k] = terms.get(k, 0) + v
            return Supernumber._make(self.space, terms, da)
        lcm = math.lcm(da, db)
        ma, mb = lcm // da, lcm // db
        terms = {k: v * ma for k, v in self._t.items()}
        for k, v in other._t.items():
            terms[k] = terms.get(k, 0) + v * mb
        return Supernumber._make(self.space, terms, lcm)

    def __sub__(self, other: "Supernumber") -> "Supernumber":
        if not isinstance(other, Supernumber):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "Supernumber":
        # negation preserves the normalization invariants, skip _make
        out = object.__new__(Supernumber)
        out.space = self.space
        out._t = {k: -v for k, v in self._t.items()}
        out._den = self._den
        out._dcache = None
        return out

    def __mul__(self, other) -> "Supernumber":
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return self.space.zero()
            return Supernumber._make(
                self.space,
                {k: v * c.numerator for k, v in self._t.items()},
                self._den * c.denominator,
            )
        if not isinstance(other, Supernumber):
            return NotImplemented
        self._check_space(other)
        fmask = self.space._fmask
        bitems = list(other._t.items())
        acc: dict[int, int] = {}
        get = acc.get
        for ak, av in self._t.items():
            am = ak & fmask
            for bk, bv in bitems:
                bm = bk & fmask
                if am & bm:
                    continue  # a repeated Grassmann factor squares to zero
                # disjoint masks or without carry, exponent fields add
                key = ak + bk
                c = av * bv
                if am and bm:
                    inv = 0
                    b = bm
                    while b:
                        j = (b & -b).bit_length() - 1
                        inv += (am >> (j + 1)).bit_count()
                        b &= b - 1
                    if inv & 1:
                        c = -c
                s = get(key)
                if s is None:
                    acc[key] = c
                else:
                    s += c
                    if s:
                        acc[key] = s
                    else:
                        del acc[key]
        return Supernumber._make(self.space, acc, self._den * other._den)

    def __rmul__(self, other) -> "Supernumber":
        if isinstance(other, (int, Fraction)):
            return self.__mul__(other)
        return NotImplemented

    def __truediv__(self, other) -> "Supernumber":
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                raise ZeroDivisionError("division of a supernumber by zero")
            return self * (Fraction(1) / c)
        return NotImplemented

    def __pow__(self, n: int) -> "Supernumber":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a natural number")
        if n and self.bosonic_degree() * n > _POW_LIMIT:
            raise ValueError("exponent too large")
        out = self.space.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Supernumber)
            and self.space == other.space
            and self._den == other._den
            and self._t == other._t
        )

    def __hash__(self):
        return hash((self.space, self._den, tuple(sorted(self._t.items()))))

    # -- derivatives ------------------------------------------------------

    def deriv(self, name: str, side: Side = Side.LEFT) -> "Supernumber":
        i = self.space.index(name)
        if self._dcache is None:
            self._dcache = {}
        cached = self._dcache.get((i, side))
        if cached is not None:
            return cached
        out = self._deriv_index(i, side)
        self._dcache[(i, side)] = out
        return out

    def _deriv_index(self, i: int, side: Side) -> "Supernumber":
        space = self.space
        sub = space._sub[i]
        terms: dict[int, int] = {}
        if space.coords[i][1] == 0:
            shift = _EXP_BITS * sub + space.q
            for k, v in self._t.items():
                e = (k >> shift) & _EXP_MAX
                if e:
                    terms[k - (1 << shift)] = v * e
        else:
            bit = 1 << sub
            left = side is Side.LEFT
            for k, v in self._t.items():
                if not k & bit:
                    continue
                pos = (k & (bit - 1)).bit_count()
                if left:
                    sign = -1 if pos & 1 else 1
                else:
                    kcount = (k & space._fmask).bit_count()
                    sign = -1 if (kcount - 1 - pos) & 1 else 1
                terms[k - bit] = v * sign
        return Supernumber._make(space, terms, self._den)

    # -- printing ----------------------------------------------------------

    def _sorted_keys(self) -> list[int]:
        # print order: total degree descending, Grassmann-free first among
        # ties, then lexicographic with earlier coordinates dominating
        unpack = self.space.unpack_key

        def key_fn(key: int):
            mask, exps = unpack(key)
            ferm = []
            while mask:
                ferm.append((mask & -mask).bit_length() - 1)
                mask &= mask - 1
            total = sum(exps) + len(ferm)
            return (-total, tuple(ferm), tuple(-e for e in exps))

        return sorted(self._t, key=key_fn)

    def _monomial_str(self, key: int) -> str:
        space = self.space
        mask, exps = space.unpack_key(key)
        factors = []
        for i, (name, par) in enumerate(space.coords):
            if par == 0:
                e = exps[space._sub[i]]
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            elif mask >> space._sub[i] & 1:
                factors.append(name)
        return "*".join(factors)

    def __str__(self) -> str:
        if not self._t:
            return "0"
        pieces = []
        for key in self._sorted_keys():
            c = Fraction(self._t[key], self._den)
            mono = self._monomial_str(key)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if not pieces:
                pieces.append(body if c > 0 else "-" + body)
            else:
                pieces.append(("+ " if c > 0 else "- ") + body)
        return " ".join(pieces)

    def __repr__(self) -> str:
        return f"<{self}>"


# -- expression parsing --------------------------------------------------
#
# expr   := ['-'] term (('+'|'-') term)*
# term   := factor (('*'|'/') factor)*      division only by rational constants
# factor := base ['^' NAT]
# base   := RATIONAL | NAME | '(' expr ')'
# No implicit multiplication; whitespace is insignificant.

_TOK_OPS = set("+-*/^()")


def _tokens(text: str) -> Iterator[tuple[str, str, int]]:
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOK_OPS:
            yield ("op", ch, i)
            i += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            yield ("nat", text[i:j], i)
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            yield ("name", text[i:j], i)
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    yield ("end", "", n)


class _Parser:
    def __init__(self, space: GradedSpace, text: str):
        self.space = space
        self.toks = list(_tokens(text))
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def take(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expr(self) -> Supernumber:
        negate = False
        if self.peek()[:2] == ("op", "-"):
            self.take()
            negate = True
        out = self.term()
        if negate:
            out = -out
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, op, _ = self.take()
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> Supernumber:
        out = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, at = self.take()
            rhs = self.factor()
            if op == "*":
                out = out * rhs
            elif rhs.is_zero():
                raise ParseError("division by zero", at)
            elif set(rhs._t) == {0}:
                out = out * Fraction(rhs._den, rhs._t[0])
            else:
                # constants are the only legal divisors
                raise ParseError("division only by rational constants", at)
        return out

    def factor(self) -> Supernumber:
        out = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, text, at = self.take()
            if kind != "nat":
                raise ParseError("exponent must be a natural number", at)
            n = int(text)
            if n > 4096:
                raise ParseError("exponent too large", at)
            out = out ** n
        return out

    def base(self) -> Supernumber:
        kind, text, at = self.take()
        if kind == "nat":
            # rational literals like 3/4 fall out of term-level division
            return self.space.constant(int(text))
        if kind == "name":
            try:
                return self.space.coordinate(text)
            except KeyError:
                raise ParseError(f"unknown coordinate {text!r}", at) from None
        if (kind, text) == ("op", "("):
            out = self.expr()
            kind2, text2, at2 = self.take()
            if (kind2, text2) != ("op", ")"):
                raise ParseError("expected ')'", at2)
            return out
        raise ParseError(
            f"unexpected token {text!r}" if text else "unexpected end of input", at
        )


def _parse(space: GradedSpace, text: str) -> Supernumber:
    parser = _Parser(space, text)
    out = parser.expr()
    kind, text2, at = parser.peek()
    if kind != "end":
        raise ParseError(f"trailing input {text2!r}", at)
    return out


# -- randomized homogeneous sampling ---------------------------------------


def _exp_vectors(nvars: int, max_total: int) -> list[tuple[int, ...]]:
    if nvars == 0:
        return [()]
    out = []

    def rec(prefix, remaining, left):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for e in range(left + 1):
            rec(prefix + [e], remaining - 1, left - e)

    rec([], nvars, max_total)
    return sorted(out)


def random_homogeneous(
    space: GradedSpace, parity: int, max_degree: int, seed: int
) -> Supernumber:
    """Dense homogeneous sample: every monomial of the requested parity and
    bosonic degree <= max_degree gets a coefficient from {-3..3}\\{0} over
    a denominator in {1, 2}, drawn from SplitMix64(seed)."""
    if parity not in (0, 1):
        raise ValueError("parity must be 0 or 1")
    if parity == 1 and space.q == 0:
        raise ValueError("no fermionic coordinates: odd parity unreachable")
    if max_degree < 0:
        raise ValueError("max_degree must be >= 0")
    rng = SplitMix64(seed)

    def mask_key(m: int):
        # canonical order: lexicographic on the ascending index list
        ferm = []
        while m:
            ferm.append((m & -m).bit_length() - 1)
            m &= m - 1
        return tuple(ferm)

    masks = sorted(
        (m for m in range(1 << space.q) if m.bit_count() & 1 == parity),
        key=mask_key,
    )
    exps = _exp_vectors(space.p, max_degree)
    terms: dict[int, int] = {}
    for mask in masks:
        for e in exps:
            num = rng.choice((-3, -2, -1, 1, 2, 3))
            den = rng.choice((1, 2))
            # common denominator 2: halve nothing, double integral entries
            terms[space.pack_key(mask, e)] = num * (2 // den)
    return Supernumber._make(space, terms, 2)
