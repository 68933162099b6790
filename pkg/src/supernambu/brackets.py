"""Multilinear graded brackets defined by small term tables.

A bracket of arity n is a sum of terms; each term applies one derivative
per argument slot (a coordinate plus a left/right side), multiplies the
results in slot order, and carries a sign that is an affine function of
the argument parities.  Mixed-parity arguments are handled by splitting
every slot into even and odd parts and extending multilinearly.

Built-in brackets:

  odd_r21         arity 3, shift 1, on x1:b,x2:b,th:f
  even_r12        arity 3, shift 0, on x:b,th1:f,th2:f
  antibracket_r11 arity 2, shift 1, on x:b,xi:f
                  {f,g} = (d_r f/dx)(d_l g/dxi) - (d_r f/dxi)(d_l g/dx)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .algebra import GradedSpace, Parity, Side, SpaceMismatchError, Supernumber


class SpecError(ValueError):
    """A bracket definition violates the schema or its own declarations."""


@dataclass(frozen=True)
class SignRule:
    """(-1) exponent: const + sum(slots[i] * parity_i), all mod 2."""

    const: int
    slots: tuple[int, ...]

    def __post_init__(self):
        if self.const not in (0, 1):
            raise SpecError("sign const must be 0 or 1")
        if any(s not in (0, 1) for s in self.slots):
            raise SpecError("sign slot coefficients must be 0 or 1")

    def evaluate(self, parities: Sequence[int]) -> int:
        bit = self.const
        for s, p in zip(self.slots, parities):
            bit ^= s & p
        return bit


@dataclass(frozen=True)
class BracketTerm:
    coeff: Fraction
    derivs: tuple[tuple[str, Side], ...]  # one (coordinate, side) per slot
    sign: SignRule


class BracketSpec:
    """Validated bracket definition over a fixed coordinate space."""

    __slots__ = ("name", "space", "arity", "epsilon", "terms")

    def __init__(
        self,
        name: str,
        space: GradedSpace,
        arity: int,
        epsilon: int,
        terms: Iterable[BracketTerm],
    ):
        if not isinstance(arity, int) or arity < 2:
            raise SpecError("arity must be an integer >= 2")
        if epsilon not in (0, 1):
            raise SpecError("epsilon must be 0 or 1")
        terms = tuple(terms)
        for t in terms:
            if len(t.derivs) != arity:
                raise SpecError("every term needs one derivative per slot")
            if len(t.sign.slots) != arity:
                raise SpecError("sign rule length must equal arity")
            ferm = 0
            for coord, side in t.derivs:
                if side not in (Side.LEFT, Side.RIGHT):
                    raise SpecError("derivative side must be Side.LEFT or Side.RIGHT")
                ferm += space.coordinate_parity(coord)  # KeyError -> unknown coord
            # each derivative by a fermionic coordinate flips the product
            # parity; the declared shift must match on every term
            if ferm % 2 != epsilon:
                raise SpecError(
                    f"term produces parity shift {ferm % 2}, declared {epsilon}"
                )
        self.name = str(name)
        self.space = space
        self.arity = arity
        self.epsilon = epsilon
        self.terms = terms

    def __repr__(self) -> str:
        return (
            f"BracketSpec({self.name!r}, arity={self.arity}, "
            f"epsilon={self.epsilon}, terms={len(self.terms)})"
        )


def _check_args(spec: BracketSpec, args: Sequence[Supernumber], want: int) -> None:
    if len(args) != want:
        raise ValueError(f"expected {want} arguments, got {len(args)}")
    for f in args:
        if f.space != spec.space:
            raise SpaceMismatchError("argument lives on a different space")


def _eval_homogeneous(
    spec: BracketSpec, args: Sequence[Supernumber], parities: Sequence[int]
) -> Supernumber:
    total = spec.space.zero()
    for term in spec.terms:
        prod = None
        for (coord, side), f in zip(term.derivs, args):
            d = f.deriv(coord, side)
            if d.is_zero():
                prod = None
                break
            prod = d if prod is None else prod * d
        if prod is None:
            continue
        c = -term.coeff if term.sign.evaluate(parities) else term.coeff
        total = total + prod * c
    return total


def eval_bracket(spec: BracketSpec, args: Sequence[Supernumber]) -> Supernumber:
    """Evaluate the bracket; arguments of mixed parity are decomposed and
    the bracket is extended multilinearly."""
    _check_args(spec, args, spec.arity)
    split: list[list[tuple[Supernumber, int]]] = []
    for f in args:
        par = f.parity()
        if par is Parity.MIXED:
            even, odd = f.parity_decompose()
            parts = []
            if not even.is_zero():
                parts.append((even, 0))
            if not odd.is_zero():
                parts.append((odd, 1))
            split.append(parts)
        elif par is Parity.ZERO:
            return spec.space.zero()
        else:
            split.append([(f, f.parity_bit())])
    total = spec.space.zero()
    for combo in itertools.product(*split):
        total = total + _eval_homogeneous(
            spec, [f for f, _ in combo], [p for _, p in combo]
        )
    return total


def bracket_parity(spec: BracketSpec, args: Sequence[Supernumber]) -> Parity:
    """Output parity on homogeneous arguments: shift + sum of parities."""
    _check_args(spec, args, spec.arity)
    bit = spec.epsilon
    for f in args:
        bit ^= f.parity_bit()  # raises on mixed parity
    return Parity.ODD if bit else Parity.EVEN


class NHVectorField:
    """First-order operator with one component per coordinate; acts on f
    as sum_i (d_r f/dz_i) * X^i."""

    __slots__ = ("space", "components")

    def __init__(self, space: GradedSpace, components: Sequence[Supernumber]):
        components = tuple(components)
        if len(components) != len(space.coords):
            raise ValueError("need one component per coordinate")
        for c in components:
            if c.space != space:
                raise SpaceMismatchError("component lives on a different space")
        self.space = space
        self.components = components

    @classmethod
    def zero(cls, space: GradedSpace) -> "NHVectorField":
        return cls(space, [space.zero()] * len(space.coords))

    def component(self, name: str) -> Supernumber:
        return self.components[self.space.index(name)]

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def parity(self) -> Parity:
        """A field is homogeneous of parity b when every nonzero component
        X^i is homogeneous of parity b + |z_i|."""
        bits = set()
        for (name, cpar), comp in zip(self.space.coords, self.components):
            par = comp.parity()
            if par is Parity.ZERO:
                continue
            if par is Parity.MIXED:
                return Parity.MIXED
            bits.add(comp.parity_bit() ^ cpar)
            if len(bits) > 1:
                return Parity.MIXED
        if not bits:
            return Parity.ZERO
        return Parity.ODD if bits.pop() else Parity.EVEN

    def parity_bit(self) -> int:
        par = self.parity()
        if par is Parity.MIXED:
            raise ValueError("field has mixed parity")
        return 1 if par is Parity.ODD else 0

    # componentwise linear structure; right module action by functions

    def __add__(self, other: "NHVectorField") -> "NHVectorField":
        if not isinstance(other, NHVectorField):
            return NotImplemented
        if self.space != other.space:
            raise SpaceMismatchError("fields live on different spaces")
        return NHVectorField(
            self.space, [a + b for a, b in zip(self.components, other.components)]
        )

    def __sub__(self, other: "NHVectorField") -> "NHVectorField":
        if not isinstance(other, NHVectorField):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "NHVectorField":
        return NHVectorField(self.space, [-c for c in self.components])

    def __mul__(self, other) -> "NHVectorField":
        if isinstance(other, (int, Fraction, Supernumber)):
            return NHVectorField(self.space, [c * other for c in self.components])
        return NotImplemented

    def __rmul__(self, other) -> "NHVectorField":
        if isinstance(other, (int, Fraction)):
            return self.__mul__(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NHVectorField)
            and self.space == other.space
            and self.components == other.components
        )

    def __hash__(self):
        return hash((self.space, self.components))

    def __str__(self) -> str:
        names = self.space.names()
        return "; ".join(f"X^{n} = {c}" for n, c in zip(names, self.components))

    def __repr__(self) -> str:
        return f"<field {self}>"


def nh_field(spec: BracketSpec, hams: Sequence[Supernumber]) -> NHVectorField:
    """Field of n-1 Hamiltonians: X^i = bracket(z_i, hams...)."""
    _check_args(spec, hams, spec.arity - 1)
    comps = [
        eval_bracket(spec, [z, *hams]) for z in spec.space.coordinates()
    ]
    return NHVectorField(spec.space, comps)


def apply_field(X: NHVectorField, f: Supernumber) -> Supernumber:
    """Action sum_i (d_r f/dz_i) * X^i; for X = nh_field(spec, hams) this
    reproduces eval_bracket(spec, [f, hams...])."""
    if f.space != X.space:
        raise SpaceMismatchError("function lives on a different space")
    total = X.space.zero()
    for (name, _), comp in zip(X.space.coords, X.components):
        if comp.is_zero():
            continue
        total = total + f.deriv(name, Side.RIGHT) * comp
    return total


def field_commutator(
    X: NHVectorField, Y: NHVectorField, convention: str = "AB"
) -> NHVectorField:
    """Graded commutator [X,Y] as a field.  Under "AB" the composition XY
    acts left-to-right, [X,Y]^i = X(Y^i) - (-1)^{|X||Y|} Y(X^i); under
    "BA" the composition order is reversed."""
    if X.space != Y.space:
        raise SpaceMismatchError("fields live on different spaces")
    if convention not in ("AB", "BA"):
        raise ValueError("convention must be 'AB' or 'BA'")
    sign = -1 if X.parity_bit() and Y.parity_bit() else 1
    comps = []
    for xi, yi in zip(X.components, Y.components):
        if convention == "AB":
            comps.append(apply_field(X, yi) - apply_field(Y, xi) * sign)
        else:
            comps.append(apply_field(Y, xi) - apply_field(X, yi) * sign)
    return NHVectorField(X.space, comps)


# -- serialization ----------------------------------------------------------


def load_spec(document: dict) -> BracketSpec:
    """Validate and build a BracketSpec from its JSON document form."""
    if not isinstance(document, dict):
        raise SpecError("bracket document must be an object")
    required = {"name", "space", "arity", "epsilon", "terms"}
    missing = required - document.keys()
    if missing:
        raise SpecError(f"missing fields: {sorted(missing)}")
    unknown = document.keys() - required
    if unknown:
        raise SpecError(f"unknown fields: {sorted(unknown)}")
    if not isinstance(document["name"], str) or not document["name"]:
        raise SpecError("name must be a nonempty string")
    try:
        space = GradedSpace.from_declaration(document["space"])
    except ValueError as e:
        raise SpecError(f"bad space declaration: {e}") from None
    arity = document["arity"]
    if not isinstance(arity, int) or isinstance(arity, bool):
        raise SpecError("arity must be an integer")
    epsilon = document["epsilon"]
    if epsilon not in (0, 1) or isinstance(epsilon, bool):
        raise SpecError("epsilon must be 0 or 1")
    if not isinstance(document["terms"], list) or not document["terms"]:
        raise SpecError("terms must be a nonempty list")
    terms = []
    for i, td in enumerate(document["terms"]):
        where = f"terms[{i}]"
        if not isinstance(td, dict) or td.keys() != {"coeff", "derivs", "sign"}:
            raise SpecError(f"{where}: need exactly coeff, derivs, sign")
        coeff = td["coeff"]
        if not isinstance(coeff, str):
            raise SpecError(f"{where}: coeff must be a rational string like '3/2'")
        try:
            coeff = Fraction(coeff)
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"{where}: bad rational {td['coeff']!r}") from None
        derivs = td["derivs"]
        if not isinstance(derivs, list):
            raise SpecError(f"{where}: derivs must be a list")
        pairs = []
        for d in derivs:
            if (
                not isinstance(d, dict)
                or d.keys() != {"coord", "side"}
                or d["side"] not in ("L", "R")
            ):
                raise SpecError(f"{where}: each deriv needs coord and side L|R")
            if d["coord"] not in space.names():
                raise SpecError(f"{where}: unknown coordinate {d['coord']!r}")
            pairs.append((d["coord"], Side(d["side"])))
        sd = td["sign"]
        if (
            not isinstance(sd, dict)
            or sd.keys() != {"const", "slots"}
            or not isinstance(sd["slots"], list)
        ):
            raise SpecError(f"{where}: sign needs const and slots")
        try:
            rule = SignRule(sd["const"], tuple(sd["slots"]))
        except SpecError as e:
            raise SpecError(f"{where}: {e}") from None
        terms.append(BracketTerm(coeff, tuple(pairs), rule))
    try:
        return BracketSpec(document["name"], space, arity, epsilon, terms)
    except SpecError as e:
        raise SpecError(str(e)) from None


def to_document(spec: BracketSpec) -> dict:
    """Inverse of load_spec; emits the canonical JSON document form."""
    return {
        "name": spec.name,
        "space": spec.space.declaration(),
        "arity": spec.arity,
        "epsilon": spec.epsilon,
        "terms": [
            {
                "coeff": str(t.coeff),
                "derivs": [
                    {"coord": c, "side": s.value} for c, s in t.derivs
                ],
                "sign": {"const": t.sign.const, "slots": list(t.sign.slots)},
            }
            for t in spec.terms
        ],
    }


# -- built-in brackets -------------------------------------------------------

_L, _R = Side.LEFT, Side.RIGHT


def _odd_r21() -> BracketSpec:
    space = GradedSpace.from_declaration("x1:b,x2:b,th:f")
    one = Fraction(1)
    t = [
        # (-1)^{|g|} [ f_x1 g_th h_x2 - f_x2 g_th h_x1 ]
        BracketTerm(one, (("x1", _L), ("th", _R), ("x2", _L)), SignRule(0, (0, 1, 0))),
        BracketTerm(-one, (("x2", _L), ("th", _R), ("x1", _L)), SignRule(0, (0, 1, 0))),
        # f_th g_x1 h_x2 - f_th g_x2 h_x1
        BracketTerm(one, (("th", _R), ("x1", _L), ("x2", _L)), SignRule(0, (0, 0, 0))),
        BracketTerm(-one, (("th", _R), ("x2", _L), ("x1", _L)), SignRule(0, (0, 0, 0))),
        # (-1)^{|g|+|h|} [ f_x2 g_x1 h_th - f_x1 g_x2 h_th ]
        BracketTerm(one, (("x2", _L), ("x1", _L), ("th", _R)), SignRule(0, (0, 1, 1))),
        BracketTerm(-one, (("x1", _L), ("x2", _L), ("th", _R)), SignRule(0, (0, 1, 1))),
    ]
    return BracketSpec("odd_r21", space, 3, 1, t)


def _even_r12() -> BracketSpec:
    space = GradedSpace.from_declaration("x:b,th1:f,th2:f")
    one = Fraction(1)
    t = [
        # (-1)^{1+|g|} f_x (g_th1 h_th2 + g_th2 h_th1)
        BracketTerm(one, (("x", _L), ("th1", _R), ("th2", _R)), SignRule(1, (0, 1, 0))),
        BracketTerm(one, (("x", _L), ("th2", _R), ("th1", _R)), SignRule(1, (0, 1, 0))),
        # (-1)^{|g|+|h|} f_th1 (g_x h_th2 - (-1)^{|h|} g_th2 h_x)
        BracketTerm(one, (("th1", _R), ("x", _L), ("th2", _R)), SignRule(0, (0, 1, 1))),
        BracketTerm(-one, (("th1", _R), ("th2", _R), ("x", _L)), SignRule(0, (0, 1, 0))),
        # (-1)^{|g|+|h|} f_th2 (g_x h_th1 - (-1)^{|h|} g_th1 h_x)
        BracketTerm(one, (("th2", _R), ("x", _L), ("th1", _R)), SignRule(0, (0, 1, 1))),
        BracketTerm(-one, (("th2", _R), ("th1", _R), ("x", _L)), SignRule(0, (0, 1, 0))),
    ]
    return BracketSpec("even_r12", space, 3, 0, t)


def _antibracket_r11() -> BracketSpec:
    space = GradedSpace.from_declaration("x:b,xi:f")
    one = Fraction(1)
    t = [
        BracketTerm(one, (("x", _R), ("xi", _L)), SignRule(0, (0, 0))),
        BracketTerm(-one, (("xi", _R), ("x", _L)), SignRule(0, (0, 0))),
    ]
    return BracketSpec("antibracket_r11", space, 2, 1, t)


_BUILTINS = {
    "odd_r21": _odd_r21,
    "even_r12": _even_r12,
    "antibracket_r11": _antibracket_r11,
}


def builtin(name: str) -> BracketSpec:
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise KeyError(
            f"unknown builtin {name!r}; have {sorted(_BUILTINS)}"
        ) from None
    return factory()


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))
