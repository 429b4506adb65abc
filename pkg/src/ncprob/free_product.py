"""The free product of factor spaces, built cumulant-first.

The algebra is spanned by a unit plus reduced tensor words: alternating
sequences of centered factor polynomials.  Multiplication concatenates and,
when boundary factors coincide, merges the boundary pair into its centered
part plus a scalar times the recursively reduced shorter product.

Cumulant functions are layered exactly as they are defined:

* ``kappa_base``        - pure tuples: the factor cumulant, or 0 when the
                          arguments straddle two factors;
* ``kappa_pure_pi``     - blockwise multiplicative extension of the above;
* ``kappa_products``    - cumulants of grouped products, as the lattice sum
                          over all pi in NC(s_m) whose join with the group
                          interval partition is full;
* ``kappa_pi_products`` - blockwise extension over groups;
* ``kappa_elements``    - arbitrary algebra elements, by multilinear
                          expansion into unit/tensor-word slots.

The state is the lattice sum phi(a_1..a_n) = sum over sigma in NC(n) of the
blockwise base-cumulant product (``state_eval``).  Everything is exact and
immutable; memo tables are lock-guarded.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from itertools import product as iter_product
from typing import Iterable, Mapping, Sequence

from .cumulant_calculus import kappa_words
from .errors import (
    DimensionMismatchError,
    FactorMismatchError,
    SpecFormatError,
    ValidationError,
)
from .moment_space import (
    EMPTY_WORD,
    FactorState,
    Letter,
    Polynomial,
    Word,
    factor_state_from_json,
)
from .nc_lattice import Partition, enumerate_nc, join_nc
from .scalar import ONE, ZERO, ComplexRational

Atom = tuple[str | None, Polynomial]
UNIT_ATOM: Atom = (None, Polynomial.one())


@dataclass(frozen=True)
class TensorWord:
    """An alternating tensor word of (factor, centered polynomial) components."""

    components: tuple[tuple[str, Polynomial], ...]

    def __post_init__(self):
        if not self.components:
            raise ValidationError("tensor word must have at least one component")
        previous = None
        for factor, poly in self.components:
            if factor == previous:
                raise ValidationError(
                    f"adjacent components share factor {factor!r}"
                )
            if poly.is_zero():
                raise ValidationError("zero component in tensor word")
            previous = factor

    @property
    def degree(self) -> int:
        return sum(poly.degree for _, poly in self.components)

    def star(self) -> "TensorWord":
        return TensorWord(
            tuple((f, p.star()) for f, p in reversed(self.components))
        )

    def sort_key(self) -> tuple:
        return (
            self.degree,
            len(self.components),
            tuple(
                (f, tuple((w.sort_key(), str(c)) for w, c in p.items()))
                for f, p in self.components
            ),
        )

    def text(self) -> str:
        return " (x) ".join(f"[{p.text()}]@{f}" for f, p in self.components)

    def __repr__(self) -> str:
        return f"TensorWord({self.text()})"


class FreeElement:
    """scalar * 1  plus  a combination of reduced tensor words."""

    __slots__ = ("scalar", "words")

    def __init__(
        self,
        scalar: ComplexRational = ZERO,
        words: Mapping[TensorWord, ComplexRational] | None = None,
    ):
        self.scalar = ComplexRational.of(scalar)
        cleaned: dict[TensorWord, ComplexRational] = {}
        for word, coeff in (words or {}).items():
            value = ComplexRational.of(coeff)
            if value:
                cleaned[word] = value
        self.words = cleaned

    @classmethod
    def zero(cls) -> "FreeElement":
        return cls()

    @classmethod
    def one(cls) -> "FreeElement":
        return cls(ONE)

    @classmethod
    def from_scalar(cls, c: ComplexRational) -> "FreeElement":
        return cls(c)

    @classmethod
    def from_word(
        cls, word: TensorWord, coeff: ComplexRational = ONE
    ) -> "FreeElement":
        return cls(ZERO, {word: coeff})

    def items(self) -> list[tuple[TensorWord, ComplexRational]]:
        return sorted(self.words.items(), key=lambda kv: kv[0].sort_key())

    def is_zero(self) -> bool:
        return not self.scalar and not self.words

    def __add__(self, other: "FreeElement") -> "FreeElement":
        if not isinstance(other, FreeElement):
            return NotImplemented
        merged = dict(self.words)
        for word, coeff in other.words.items():
            merged[word] = merged.get(word, ZERO) + coeff
        return FreeElement(self.scalar + other.scalar, merged)

    def __sub__(self, other: "FreeElement") -> "FreeElement":
        if not isinstance(other, FreeElement):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "FreeElement":
        return FreeElement(-self.scalar, {w: -c for w, c in self.words.items()})

    def scale(self, c: ComplexRational) -> "FreeElement":
        c = ComplexRational.of(c)
        return FreeElement(self.scalar * c, {w: x * c for w, x in self.words.items()})

    def __rmul__(self, other) -> "FreeElement":
        try:
            return self.scale(ComplexRational.of(other))
        except TypeError:
            return NotImplemented

    def star(self) -> "FreeElement":
        return FreeElement(
            self.scalar.conjugate(),
            {w.star(): c.conjugate() for w, c in self.words.items()},
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FreeElement)
            and self.scalar == other.scalar
            and self.words == other.words
        )

    __hash__ = None  # mutable mapping inside; equality is structural

    def text(self) -> str:
        parts = []
        if self.scalar or not self.words:
            parts.append(f"({self.scalar}) 1")
        for word, coeff in self.items():
            parts.append(f"({coeff}) {word.text()}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"FreeElement({self.text()})"


def star_element(x: FreeElement) -> FreeElement:
    """The *-operation on the free product; centeredness is preserved."""
    return x.star()


@dataclass(frozen=True)
class GroupedWord:
    """A flat letter sequence cut into groups by boundary indices.

    ``boundaries`` are the strictly increasing cut points s_1 < ... < s_m
    with s_m = len(letters); group j holds letters s_{j-1}+1 .. s_j.  Within
    a group adjacent letters must come from different factors.
    """

    letters: tuple[Letter, ...]
    boundaries: tuple[int, ...]

    def __post_init__(self):
        if not self.letters:
            raise ValidationError("grouped word must contain letters")
        bounds = self.boundaries
        if (
            not bounds
            or list(bounds) != sorted(set(bounds))
            or bounds[0] < 1
            or bounds[-1] != len(self.letters)
        ):
            raise ValidationError(
                f"boundaries {bounds} invalid for {len(self.letters)} letters"
            )
        for group in self.groups():
            for left, right in zip(group, group[1:]):
                if left.factor == right.factor:
                    raise ValidationError(
                        f"letters {left.text()} {right.text()} of factor "
                        f"{left.factor!r} are adjacent within a group"
                    )

    @property
    def group_count(self) -> int:
        return len(self.boundaries)

    def groups(self) -> tuple[tuple[Letter, ...], ...]:
        out = []
        start = 0
        for stop in self.boundaries:
            out.append(self.letters[start:stop])
            start = stop
        return tuple(out)

    def sigma_interval(self) -> Partition:
        """The interval partition {{1..s_1}, {s_1+1..s_2}, ...}."""
        blocks = []
        start = 0
        for stop in self.boundaries:
            blocks.append(range(start + 1, stop + 1))
            start = stop
        return Partition.of(len(self.letters), blocks)


class ProductSpace:
    """The free product of validated factor states with one degree bound."""

    def __init__(self, factors: Sequence[FactorState]):
        if not factors:
            raise ValidationError("a product space needs at least one factor")
        indices = [f.factor for f in factors]
        if len(set(indices)) != len(indices):
            raise ValidationError(f"duplicate factor indices in {indices}")
        bounds = {f.degree_bound for f in factors}
        if len(bounds) != 1:
            raise DimensionMismatchError(
                f"factors must share one degree bound, got {sorted(bounds)}"
            )
        self.factors: dict[str, FactorState] = {f.factor: f for f in factors}
        self.degree_bound = bounds.pop()
        self._lock = threading.Lock()
        self._kappa_factor_memo: dict[tuple[str, tuple[Word, ...]], ComplexRational] = {}
        self._kappa_base_memo: dict[tuple[Atom, ...], ComplexRational] = {}
        self._phi_memo: dict[tuple[Atom, ...], ComplexRational] = {}
        self._tops_memo: dict[tuple[int, ...], tuple[Partition, ...]] = {}

    # -- elements ---------------------------------------------------------

    def factor_state(self, index: str) -> FactorState:
        try:
            return self.factors[index]
        except KeyError:
            raise FactorMismatchError(f"unknown factor {index!r}") from None

    def one(self) -> FreeElement:
        return FreeElement.one()

    def centered_word(self, index: str, word: Word) -> Polynomial:
        """The canonical basis vector w - phi_i(w) 1 of the centered subspace."""
        if word.degree == 0:
            raise ValidationError("the empty word has no centered basis vector")
        value = self.factor_state(index).phi_word(word)
        return Polynomial({word: ONE, EMPTY_WORD: -value})

    def _expand_to_basis(
        self, components: tuple[tuple[str, Polynomial], ...]
    ) -> FreeElement:
        # A centered polynomial p with word coefficients c_w equals
        # sum_w c_w (w - phi(w) 1), so tensor words expand multilinearly into
        # the canonical basis of centered single-word components.  This is
        # the unique normal form: structural equality of normalized elements
        # decides equality in the algebra.
        slot_choices = []
        for index, poly in components:
            if self.factor_state(index).phi_poly(poly):
                raise ValidationError(
                    f"component {poly.text()!r} is not centered in {index!r}"
                )
            choices = [
                (coeff, (index, word))
                for word, coeff in poly.items()
                if word.degree > 0
            ]
            if not choices:
                return FreeElement.zero()
            slot_choices.append(choices)
        total = FreeElement.zero()
        for combo in iter_product(*slot_choices):
            coeff = ONE
            slots = []
            for c, (index, word) in combo:
                coeff = coeff * c
                slots.append((index, self.centered_word(index, word)))
            if coeff:
                total = total + FreeElement.from_word(TensorWord(tuple(slots)), coeff)
        return total

    def normal_form(self, x: FreeElement) -> FreeElement:
        """Re-express x over the canonical centered-word basis."""
        total = FreeElement(x.scalar)
        for word, coeff in x.words.items():
            total = total + self._expand_to_basis(word.components).scale(coeff)
        return total

    def embed(self, index: str, p: Polynomial) -> FreeElement:
        """phi_i(p) * 1  plus the centered part as length-1 tensor words."""
        state = self.factor_state(index)
        value = state.phi_poly(p)
        centered = p - Polynomial.monomial(EMPTY_WORD, value)
        if centered.is_zero():
            return FreeElement(value)
        return FreeElement(value) + self._expand_to_basis(((index, centered),))

    def embed_letter(self, letter: Letter) -> FreeElement:
        return self.embed(letter.factor, Polynomial.from_letter(letter))

    def multiply(self, x: FreeElement, y: FreeElement) -> FreeElement:
        """Bilinear extension of concatenation-and-reduction, in normal form."""
        x = self.normal_form(x)
        y = self.normal_form(y)
        total = FreeElement(x.scalar * y.scalar)
        for word, coeff in y.words.items():
            total = total + FreeElement.from_word(word, x.scalar * coeff)
        for word, coeff in x.words.items():
            total = total + FreeElement.from_word(word, y.scalar * coeff)
        for wx, cx in x.words.items():
            for wy, cy in y.words.items():
                total = total + self._multiply_components(
                    wx.components, wy.components
                ).scale(cx * cy)
        return total

    def _multiply_components(
        self,
        left: tuple[tuple[str, Polynomial], ...],
        right: tuple[tuple[str, Polynomial], ...],
    ) -> FreeElement:
        if not left and not right:
            return FreeElement.one()
        if not left:
            return self._expand_to_basis(right)
        if not right:
            return self._expand_to_basis(left)
        factor_left, poly_left = left[-1]
        factor_right, poly_right = right[0]
        if factor_left != factor_right:
            return self._expand_to_basis(left + right)
        state = self.factor_state(factor_left)
        merged = poly_left * poly_right
        value = state.phi_poly(merged)  # raises past the degree bound
        centered = merged - Polynomial.monomial(EMPTY_WORD, value)
        out = FreeElement.zero()
        if not centered.is_zero():
            out = out + self._expand_to_basis(
                left[:-1] + ((factor_left, centered),) + right[1:]
            )
        if value:
            out = out + self._multiply_components(left[:-1], right[1:]).scale(value)
        return out

    def validate_element(self, x: FreeElement) -> None:
        """Assert the canonical-form invariants, including centeredness."""
        for word in x.words:
            for factor, poly in word.components:
                state = self.factor_state(factor)
                if state.phi_poly(poly):
                    raise ValidationError(
                        f"component {poly.text()!r} of {word.text()} "
                        f"is not centered in factor {factor!r}"
                    )

    # -- cumulant functions -----------------------------------------------

    def _kappa_factor_words(
        self, factor: str, words: tuple[Word, ...]
    ) -> ComplexRational:
        key = (factor, words)
        with self._lock:
            cached = self._kappa_factor_memo.get(key)
        if cached is not None:
            return cached
        value = kappa_words(self.factor_state(factor), words)
        with self._lock:
            self._kappa_factor_memo.setdefault(key, value)
        return value

    def _kappa_base_atoms(self, atoms: tuple[Atom, ...]) -> ComplexRational:
        with self._lock:
            cached = self._kappa_base_memo.get(atoms)
        if cached is not None:
            return cached
        present = {f for f, _ in atoms if f is not None}
        if len(present) > 1:
            value = ZERO
        elif not present:
            value = ONE if len(atoms) == 1 else ZERO
        else:
            factor = present.pop()
            value = ZERO
            for combo in iter_product(*(tuple(p.items()) for _, p in atoms)):
                coeff = ONE
                for _, c in combo:
                    coeff = coeff * c
                if coeff:
                    words = tuple(w for w, _ in combo)
                    value = value + coeff * self._kappa_factor_words(factor, words)
        with self._lock:
            self._kappa_base_memo.setdefault(atoms, value)
        return value

    def kappa_base(self, letters: Sequence[Letter]) -> ComplexRational:
        """Factor cumulant if all letters share a factor, otherwise 0."""
        if not letters:
            raise ValidationError("kappa_base needs at least one letter")
        return self._kappa_base_atoms(_letter_atoms(letters))

    def kappa_pure_pi(
        self, pi: Partition, letters: Sequence[Letter]
    ) -> ComplexRational:
        """Blockwise multiplicative extension of kappa_base."""
        if len(letters) != pi.n:
            raise DimensionMismatchError(
                f"partition of {pi.n} applied to {len(letters)} letters"
            )
        atoms = _letter_atoms(letters)
        total = ONE
        for block in pi.blocks:
            total = total * self._kappa_base_atoms(tuple(atoms[i - 1] for i in block))
            if total.is_zero():
                break
        return total

    def _admissible_tops(self, sizes: tuple[int, ...]) -> tuple[Partition, ...]:
        """All pi in NC(sum sizes) whose join with the interval partition is full."""
        with self._lock:
            cached = self._tops_memo.get(sizes)
        if cached is not None:
            return cached
        n = sum(sizes)
        blocks = []
        start = 0
        for size in sizes:
            blocks.append(range(start + 1, start + size + 1))
            start += size
        sigma = Partition.of(n, blocks)
        top = Partition.top(n)
        tops = tuple(pi for pi in enumerate_nc(n) if join_nc(pi, sigma) == top)
        with self._lock:
            self._tops_memo.setdefault(sizes, tops)
        return tops

    def _kappa_products_atoms(
        self, groups: Sequence[tuple[Atom, ...]]
    ) -> ComplexRational:
        atoms = tuple(a for group in groups for a in group)
        sizes = tuple(len(group) for group in groups)
        total = ZERO
        for pi in self._admissible_tops(sizes):
            term = ONE
            for block in pi.blocks:
                term = term * self._kappa_base_atoms(
                    tuple(atoms[i - 1] for i in block)
                )
                if term.is_zero():
                    break
            total = total + term
        return total

    def kappa_products(self, gw: GroupedWord) -> ComplexRational:
        """Cumulant of the grouped products: the join-constrained lattice sum."""
        atoms = _letter_atoms(gw.letters)
        groups = []
        start = 0
        for stop in gw.boundaries:
            groups.append(atoms[start:stop])
            start = stop
        return self._kappa_products_atoms(groups)

    def kappa_pi_products(self, pi: Partition, gw: GroupedWord) -> ComplexRational:
        """Blockwise extension over groups, order preserved within blocks."""
        group_atoms = []
        start = 0
        atoms = _letter_atoms(gw.letters)
        for stop in gw.boundaries:
            group_atoms.append(atoms[start:stop])
            start = stop
        if pi.n != len(group_atoms):
            raise DimensionMismatchError(
                f"partition of {pi.n} applied to {len(group_atoms)} groups"
            )
        total = ONE
        for block in pi.blocks:
            total = total * self._kappa_products_atoms(
                [group_atoms[i - 1] for i in block]
            )
            if total.is_zero():
                break
        return total

    def kappa_elements(self, args: Sequence[FreeElement]) -> ComplexRational:
        """kappa_m on arbitrary elements, by multilinear expansion.

        Each argument splits into its scalar part (a unit slot) and its
        tensor words (whose components become the group's pure slots).
        """
        if not args:
            raise ValidationError("kappa_elements needs at least one argument")
        expansions = []
        for element in args:
            choices: list[tuple[ComplexRational, tuple[Atom, ...]]] = []
            if element.scalar:
                choices.append((element.scalar, (UNIT_ATOM,)))
            for word, coeff in element.words.items():
                choices.append((coeff, tuple(word.components)))
            expansions.append(choices)
        total = ZERO
        for combo in iter_product(*expansions):
            coeff = ONE
            for c, _ in combo:
                coeff = coeff * c
            if coeff:
                total = total + coeff * self._kappa_products_atoms(
                    [group for _, group in combo]
                )
        return total

    # -- the state ---------------------------------------------------------

    def _phi_atoms(self, atoms: tuple[Atom, ...]) -> ComplexRational:
        if not atoms:
            return ONE
        with self._lock:
            cached = self._phi_memo.get(atoms)
        if cached is not None:
            return cached
        total = ZERO
        for sigma in enumerate_nc(len(atoms)):
            term = ONE
            for block in sigma.blocks:
                term = term * self._kappa_base_atoms(
                    tuple(atoms[i - 1] for i in block)
                )
                if term.is_zero():
                    break
            total = total + term
        with self._lock:
            self._phi_memo.setdefault(atoms, total)
        return total

    def state_eval(
        self,
        x: FreeElement | Sequence[Letter] | Sequence[tuple[str, Polynomial]],
    ) -> ComplexRational:
        """The constructed state phi.

        For a flat product of pure arguments (letters, or (factor,
        polynomial) pairs) this is the lattice sum over NC(n) of blockwise
        base cumulants; for a FreeElement it is the scalar part plus the
        same sum applied to each tensor word's components.
        """
        if isinstance(x, FreeElement):
            total = x.scalar
            for word, coeff in x.words.items():
                total = total + coeff * self._phi_atoms(tuple(word.components))
            return total
        return self._phi_atoms(self._as_atoms(x))

    def _as_atoms(self, args: Iterable) -> tuple[Atom, ...]:
        atoms: list[Atom] = []
        for arg in args:
            if isinstance(arg, Letter):
                self.factor_state(arg.factor)
                atoms.append((arg.factor, Polynomial.from_letter(arg)))
            elif (
                isinstance(arg, tuple)
                and len(arg) == 2
                and isinstance(arg[1], Polynomial)
            ):
                self.factor_state(arg[0])
                atoms.append((arg[0], arg[1]))
            else:
                raise ValidationError(
                    f"cannot interpret {arg!r} as a pure product argument"
                )
        return tuple(atoms)

    # -- letter resolution --------------------------------------------------

    def resolve_letter(self, name: str) -> Letter:
        """Find the unique factor owning generator ``name``."""
        starred = name.endswith("*")
        base = name[:-1] if starred else name
        hits = [
            state.letter(base)
            for state in self.factors.values()
            if any(g.name == base for g in state.generators)
        ]
        if not hits:
            raise SpecFormatError(f"unknown letter {name!r}")
        if len(hits) > 1:
            raise SpecFormatError(
                f"letter {base!r} is ambiguous across factors "
                f"{[l.factor for l in hits]}"
            )
        return hits[0].star() if starred else hits[0]

    def parse_letters(self, text: str) -> tuple[Letter, ...]:
        tokens = text.split()
        if not tokens:
            raise SpecFormatError("empty word")
        return tuple(self.resolve_letter(tok) for tok in tokens)

    def __repr__(self) -> str:
        return (
            f"ProductSpace({sorted(self.factors)}, N={self.degree_bound})"
        )


def _letter_atoms(letters: Sequence[Letter]) -> tuple[Atom, ...]:
    return tuple((l.factor, Polynomial.from_letter(l)) for l in letters)


def product_space_from_json(obj: object) -> ProductSpace:
    """Load the JSON product spec.

    Schema::

        {"degree_bound": N, "factors": [<factor spec>, ...]}

    Factor degree bounds must all equal the product bound, and generator
    names must be unique across factors so command-line words resolve.
    """
    if not isinstance(obj, dict):
        raise SpecFormatError("product spec must be a JSON object")
    try:
        degree_bound = obj["degree_bound"]
        factors_raw = obj["factors"]
    except KeyError as exc:
        raise SpecFormatError(f"product spec missing key {exc.args[0]!r}") from exc
    if not isinstance(degree_bound, int):
        raise SpecFormatError("'degree_bound' must be an integer")
    if not isinstance(factors_raw, list) or not factors_raw:
        raise SpecFormatError("'factors' must be a non-empty list")
    factors = [factor_state_from_json(f) for f in factors_raw]
    for f in factors:
        if f.degree_bound != degree_bound:
            raise SpecFormatError(
                f"factor {f.factor!r} has degree bound {f.degree_bound}, "
                f"product declares {degree_bound}"
            )
    names: dict[str, str] = {}
    for f in factors:
        for g in f.generators:
            if g.name in names:
                raise SpecFormatError(
                    f"generator {g.name!r} appears in factors "
                    f"{names[g.name]!r} and {f.factor!r}"
                )
            names[g.name] = f.factor
    try:
        return ProductSpace(factors)
    except (ValidationError, DimensionMismatchError) as exc:
        raise SpecFormatError(str(exc)) from exc
