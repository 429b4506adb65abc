"""Moment <-> free-cumulant conversion on a single factor, and free additive
convolution of scalar moment sequences.

The two directions are implemented independently and never derived from one
another, so round-trip tests are meaningful:

* cumulants from moments:  kappa_n(a_1..a_n) = sum over sigma in NC(n) of
  phi_sigma[a_1..a_n] * mu(sigma, 1_n);
* moments from cumulants:  phi(a_1..a_n) = sum over sigma in NC(n) of
  kappa_sigma[a_1..a_n],

with kappa_sigma / phi_sigma the multiplicative (blockwise, order-preserving)
extensions.  Everything is exact.

Exhaustive lattice sums are capped at ``DEFAULT_DEGREE_CAP`` (= 12, the
enumeration cap of ``nc_lattice``); callers may pass a smaller cap.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import (
    DimensionMismatchError,
    SizeOutOfRangeError,
    TruncationError,
    ValidationError,
)
from .moment_space import FactorState, Letter, Word
from .nc_lattice import Partition, enumerate_nc, leq, moebius
from .scalar import ONE, ZERO, ComplexRational

DEFAULT_DEGREE_CAP = 12


def _check_cap(n: int, cap: int) -> None:
    if n < 1:
        raise ValidationError("cumulants need at least one argument")
    if n > cap:
        raise SizeOutOfRangeError(
            f"lattice sum over NC({n}) exceeds the cap {cap}"
        )


def kappa_words(
    state: FactorState, words: Sequence[Word], cap: int = DEFAULT_DEGREE_CAP
) -> ComplexRational:
    """Joint free cumulant of a tuple of factor words, by Moebius inversion.

    Words may be empty (the identity); the total degree of every block
    evaluation must stay within the state's bound.
    """
    n = len(words)
    _check_cap(n, cap)
    top = Partition.top(n)
    total = ZERO
    for sigma in enumerate_nc(n):
        phi_sigma = ONE
        for block in sigma.blocks:
            concatenated = Word(
                tuple(l for i in block for l in words[i - 1].letters)
            )
            phi_sigma = phi_sigma * state.phi_word(concatenated)
        total = total + phi_sigma * moebius(sigma, top)
    return total


def kappa_n(
    state: FactorState, letters: Sequence[Letter], cap: int = DEFAULT_DEGREE_CAP
) -> ComplexRational:
    """kappa_n(a_1, ..., a_n) for single-letter arguments."""
    return kappa_words(state, [Word((l,)) for l in letters], cap)


def kappa_pi(
    state: FactorState,
    pi: Partition,
    letters: Sequence[Letter],
    cap: int = DEFAULT_DEGREE_CAP,
) -> ComplexRational:
    """Multiplicative extension: product of kappa over pi's blocks."""
    if len(letters) != pi.n:
        raise DimensionMismatchError(
            f"partition of {pi.n} elements applied to {len(letters)} letters"
        )
    total = ONE
    for block in pi.blocks:
        total = total * kappa_n(state, [letters[i - 1] for i in block], cap)
    return total


def kappa_pi_via_moebius(
    state: FactorState,
    pi: Partition,
    letters: Sequence[Letter],
    cap: int = DEFAULT_DEGREE_CAP,
) -> ComplexRational:
    """The same kappa_pi as a Moebius sum over [0_n, pi].

    Implemented separately from the block-product form; the two are asserted
    equal in the test suite.
    """
    if len(letters) != pi.n:
        raise DimensionMismatchError(
            f"partition of {pi.n} elements applied to {len(letters)} letters"
        )
    _check_cap(pi.n, cap)
    total = ZERO
    for sigma in enumerate_nc(pi.n):
        if not leq(sigma, pi):
            continue
        total = total + state.eval_phi_pi(sigma, letters) * moebius(sigma, pi)
    return total


class CumulantTable:
    """kappa values of one factor, keyed by letter tuples of length <= N.

    Either backed by a FactorState (values computed lazily via Moebius
    inversion and memoized) or given explicitly.  Lookup is guarded by a
    lock so the memo table is safe for concurrent readers.
    """

    def __init__(
        self,
        factor: str,
        degree_bound: int,
        *,
        state: FactorState | None = None,
        values: Mapping[tuple[Letter, ...], ComplexRational] | None = None,
    ):
        if (state is None) == (values is None):
            raise ValidationError("provide exactly one of state= or values=")
        self.factor = factor
        self.degree_bound = degree_bound
        self._state = state
        self._values: dict[tuple[Letter, ...], ComplexRational] = dict(values or {})
        self._lock = threading.Lock()

    @classmethod
    def from_state(cls, state: FactorState) -> "CumulantTable":
        return cls(state.factor, state.degree_bound, state=state)

    @classmethod
    def from_values(
        cls,
        factor: str,
        degree_bound: int,
        values: Mapping[tuple[Letter, ...], ComplexRational],
    ) -> "CumulantTable":
        return cls(factor, degree_bound, values=values)

    def value(self, letters: tuple[Letter, ...]) -> ComplexRational:
        if not letters or len(letters) > self.degree_bound:
            raise TruncationError(
                f"cumulant order {len(letters)} outside 1..{self.degree_bound}"
            )
        with self._lock:
            cached = self._values.get(letters)
        if cached is not None:
            return cached
        if self._state is None:
            raise ValidationError(
                f"no cumulant value for letters {' '.join(l.text() for l in letters)!r}"
            )
        computed = kappa_n(self._state, letters)
        with self._lock:
            self._values.setdefault(letters, computed)
        return computed


def moments_from_cumulants(
    table: CumulantTable, letters: Sequence[Letter], cap: int = DEFAULT_DEGREE_CAP
) -> ComplexRational:
    """phi(a_1...a_n) = sum over sigma in NC(n) of the blockwise kappa product."""
    n = len(letters)
    _check_cap(n, cap)
    total = ZERO
    for sigma in enumerate_nc(n):
        term = ONE
        for block in sigma.blocks:
            term = term * table.value(tuple(letters[i - 1] for i in block))
        total = total + term
    return total


@dataclass(frozen=True)
class MomentSequence:
    """Moments m_1..m_N of a single selfadjoint variable."""

    degree_bound: int
    values: tuple[ComplexRational, ...]

    def __post_init__(self):
        if self.degree_bound < 1 or len(self.values) != self.degree_bound:
            raise ValidationError(
                f"need exactly {self.degree_bound} moments, got {len(self.values)}"
            )

    @classmethod
    def of(cls, values: Sequence[ComplexRational | int]) -> "MomentSequence":
        vals = tuple(ComplexRational.of(v) for v in values)
        return cls(len(vals), vals)

    def m(self, k: int) -> ComplexRational:
        if k == 0:
            return ONE
        if not 1 <= k <= self.degree_bound:
            raise TruncationError(f"moment m_{k} outside bound {self.degree_bound}")
        return self.values[k - 1]


def cumulants_from_moment_sequence(seq: MomentSequence) -> tuple[ComplexRational, ...]:
    """(kappa_1, ..., kappa_N) of a single variable, via Moebius inversion."""
    out = []
    for n in range(1, seq.degree_bound + 1):
        top = Partition.top(n)
        total = ZERO
        for sigma in enumerate_nc(n):
            term = ONE
            for block in sigma.blocks:
                term = term * seq.m(len(block))
            total = total + term * moebius(sigma, top)
        out.append(total)
    return tuple(out)


def moment_sequence_from_cumulants(
    cumulants: Sequence[ComplexRational],
) -> MomentSequence:
    """Rebuild m_1..m_N from (kappa_1, ..., kappa_N) by the lattice sum."""
    kappas = [ComplexRational.of(c) for c in cumulants]
    values = []
    for n in range(1, len(kappas) + 1):
        total = ZERO
        for sigma in enumerate_nc(n):
            term = ONE
            for block in sigma.blocks:
                term = term * kappas[len(block) - 1]
            total = total + term
        values.append(total)
    return MomentSequence.of(values)


def free_convolve_additive(x: MomentSequence, y: MomentSequence) -> MomentSequence:
    """Moments of the free sum: cumulants add, then invert back to moments."""
    if x.degree_bound != y.degree_bound:
        raise DimensionMismatchError(
            f"degree bounds differ: {x.degree_bound} vs {y.degree_bound}"
        )
    for seq in (x, y):
        bad = [v for v in seq.values if not v.is_real()]
        if bad:
            raise ValidationError(
                f"free convolution needs real moments, got {bad[0]}"
            )
    kx = cumulants_from_moment_sequence(x)
    ky = cumulants_from_moment_sequence(y)
    return moment_sequence_from_cumulants([a + b for a, b in zip(kx, ky)])
