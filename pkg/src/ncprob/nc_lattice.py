"""The lattice NC(n) of non-crossing partitions of {1..n}.

Partitions are kept in canonical form (blocks ascending, sorted by least
element) so equality and hashing are structural.  ``enumerate_nc`` lists
NC(n) in lexicographic order of the restricted-growth string; the all-zero
string comes first, so the order starts at the one-block partition ``1_n``
and ends at the all-singletons partition ``0_n``.  The enumeration cap is
``MAX_ENUM_N`` = 12 (Catalan(12) = 208012 partitions).

The partial order is reverse refinement, the join is the NC(n) join
(set-partition join followed by merging crossing blocks), and the Moebius
function is computed by its defining recursion

    mu(s, s) = 1,    sum over s <= t <= p of mu(s, t) = 0   for s < p,

memoized per interval.  All values are immutable; the memo tables are
guarded by a lock so concurrent readers see consistent results.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

from .errors import (
    DimensionMismatchError,
    OrderViolationError,
    SizeOutOfRangeError,
    SpecFormatError,
    ValidationError,
)

MAX_ENUM_N = 12

_lock = threading.RLock()
_nc_cache: dict[int, tuple["Partition", ...]] = {}
_upset_cache: dict["Partition", tuple["Partition", ...]] = {}
_mu_cache: dict[tuple["Partition", "Partition"], int] = {}
_block_map_cache: dict["Partition", tuple[int, ...]] = {}


@dataclass(frozen=True)
class Partition:
    """A set partition of {1..n} in canonical form."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"ground-set size must be positive, got {self.n}")
        seen: set[int] = set()
        count = 0
        previous_min = 0
        for block in self.blocks:
            if not block:
                raise ValidationError("empty block")
            if any(x >= y for x, y in zip(block, block[1:])):
                raise ValidationError(f"block {block} not strictly ascending")
            if block[0] <= previous_min:
                raise ValidationError("blocks not sorted by least element")
            previous_min = block[0]
            seen.update(block)
            count += len(block)
        if count != self.n or seen != set(range(1, self.n + 1)):
            raise ValidationError(
                f"blocks {self.blocks} do not partition {{1..{self.n}}}"
            )

    @classmethod
    def of(cls, n: int, blocks: Iterable[Iterable[int]]) -> "Partition":
        canon = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0] if b else 0))
        return cls(n, canon)

    @classmethod
    def bottom(cls, n: int) -> "Partition":
        return cls(n, tuple((k,) for k in range(1, n + 1)))

    @classmethod
    def top(cls, n: int) -> "Partition":
        return cls(n, (tuple(range(1, n + 1)),))

    @classmethod
    def from_rgs(cls, rgs: tuple[int, ...]) -> "Partition":
        blocks: dict[int, list[int]] = {}
        for pos, label in enumerate(rgs, start=1):
            blocks.setdefault(label, []).append(pos)
        return cls.of(len(rgs), blocks.values())

    def rgs(self) -> tuple[int, ...]:
        """Restricted-growth string: label of each element's block, labels by first appearance."""
        out = [0] * self.n
        for label, block in enumerate(self.blocks):
            for x in block:
                out[x - 1] = label
        return tuple(out)

    def block_map(self) -> tuple[int, ...]:
        """block_map()[x-1] = index of the block containing x."""
        with _lock:
            cached = _block_map_cache.get(self)
            if cached is None:
                cached = self.rgs()
                _block_map_cache[self] = cached
            return cached

    def block_count(self) -> int:
        return len(self.blocks)

    def __str__(self) -> str:
        return "".join("{" + ",".join(str(x) for x in b) + "}" for b in self.blocks)

    def __repr__(self) -> str:
        return f"Partition({self})"


@dataclass(frozen=True)
class LatticePair:
    """A validated comparable pair lower <= upper in NC(n)."""

    lower: Partition
    upper: Partition

    def __post_init__(self):
        if self.lower.n != self.upper.n:
            raise DimensionMismatchError(
                f"ground sets differ: {self.lower.n} vs {self.upper.n}"
            )
        for p in (self.lower, self.upper):
            if not is_noncrossing(p):
                raise ValidationError(f"{p} is crossing")
        if not leq(self.lower, self.upper):
            raise OrderViolationError(f"{self.lower} is not below {self.upper}")

    @property
    def n(self) -> int:
        return self.lower.n


def parse_partition(text: str) -> Partition:
    """Parse the canonical text form, e.g. ``"{1,3}{2}{4}"``.

    Whitespace is allowed anywhere; the blocks must cover {1..n} for the
    implied n = largest element.
    """
    s = "".join(text.split())
    if not s.startswith("{") or not s.endswith("}"):
        raise SpecFormatError(f"partition text must be {{...}}{{...}} blocks: {text!r}")
    blocks: list[tuple[int, ...]] = []
    for chunk in s[1:-1].split("}{"):
        if not chunk:
            raise SpecFormatError(f"empty block in {text!r}")
        try:
            block = tuple(int(tok) for tok in chunk.split(","))
        except ValueError as exc:
            raise SpecFormatError(f"bad block {chunk!r} in {text!r}") from exc
        blocks.append(block)
    n = max(max(b) for b in blocks)
    try:
        return Partition.of(n, blocks)
    except ValidationError as exc:
        raise SpecFormatError(f"not a partition of {{1..{n}}}: {text!r}") from exc


def is_noncrossing(p: Partition) -> bool:
    """True iff no quadruple i<j<k<l has {i,k} and {j,l} in two distinct blocks.

    Two blocks cross exactly when their elements alternate along the line
    at least four times (pattern B C B C), so a pairwise merge scan suffices.
    """
    for left, right in combinations(p.blocks, 2):
        if _blocks_cross(left, right):
            return False
    return True


def _blocks_cross(left: tuple[int, ...], right: tuple[int, ...]) -> bool:
    merged = sorted([(x, 0) for x in left] + [(x, 1) for x in right])
    switches = 0
    last = merged[0][1]
    for _, owner in merged[1:]:
        if owner != last:
            switches += 1
            last = owner
    return switches >= 3


def leq(sigma: Partition, pi: Partition) -> bool:
    """Reverse refinement: every block of sigma lies inside one block of pi."""
    if sigma.n != pi.n:
        raise DimensionMismatchError(f"ground sets differ: {sigma.n} vs {pi.n}")
    owner = pi.block_map()
    for block in sigma.blocks:
        target = owner[block[0] - 1]
        for x in block[1:]:
            if owner[x - 1] != target:
                return False
    return True


def join_nc(sigma: Partition, pi: Partition) -> Partition:
    """The NC(n) join: set-partition join, then merge crossing blocks.

    The set-partition join of two non-crossing partitions may cross; any
    crossing pair of blocks must be merged in every non-crossing upper
    bound, so repeated merging is forced and yields the least one.
    """
    if sigma.n != pi.n:
        raise DimensionMismatchError(f"ground sets differ: {sigma.n} vs {pi.n}")
    for p in (sigma, pi):
        if not is_noncrossing(p):
            raise ValidationError(f"{p} is crossing")
    n = sigma.n
    parent = list(range(n + 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    for p in (sigma, pi):
        for block in p.blocks:
            for x in block[1:]:
                union(block[0], x)

    def current_blocks() -> list[tuple[int, ...]]:
        groups: dict[int, list[int]] = {}
        for x in range(1, n + 1):
            groups.setdefault(find(x), []).append(x)
        return [tuple(b) for b in groups.values()]

    blocks = current_blocks()
    merged = True
    while merged:
        merged = False
        for left, right in combinations(blocks, 2):
            if _blocks_cross(left, right):
                union(left[0], right[0])
                blocks = current_blocks()
                merged = True
                break
    return Partition.of(n, blocks)


def enumerate_nc(n: int) -> tuple[Partition, ...]:
    """All of NC(n), in lexicographic restricted-growth-string order.

    The count is the n-th Catalan number.  Results are cached per n.
    """
    if n < 1 or n > MAX_ENUM_N:
        raise SizeOutOfRangeError(
            f"n must be within 1..{MAX_ENUM_N}, got {n}"
        )
    with _lock:
        cached = _nc_cache.get(n)
    if cached is not None:
        return cached
    result = tuple(Partition.from_rgs(r) for r in _iter_nc_rgs(n))
    with _lock:
        _nc_cache.setdefault(n, result)
    return result


def _iter_nc_rgs(n: int) -> Iterator[tuple[int, ...]]:
    # Non-crossing partitions are exactly the partitions buildable with a
    # stack of open blocks: element k either joins an open block (closing
    # every block opened after it) or opens a new one.  Open blocks carry
    # ascending labels bottom-to-top, so trying them bottom-up and then a
    # fresh label yields restricted-growth strings in lexicographic order.
    rgs = [0] * n

    def walk(pos: int, stack: tuple[int, ...], next_label: int) -> Iterator[tuple[int, ...]]:
        if pos == n:
            yield tuple(rgs)
            return
        for depth in range(len(stack)):
            rgs[pos] = stack[depth]
            yield from walk(pos + 1, stack[: depth + 1], next_label)
        rgs[pos] = next_label
        yield from walk(pos + 1, stack + (next_label,), next_label + 1)

    yield from walk(0, (), 0)


def catalan(n: int) -> int:
    if n < 0:
        raise SizeOutOfRangeError(f"Catalan index must be non-negative, got {n}")
    return math.comb(2 * n, n) // (n + 1)


def moebius(sigma: Partition, pi: Partition) -> int:
    """mu(sigma, pi) on NC(n), by the defining recursion, memoized.

    The extension to sigma == pi has value 1 (the recursion base).
    """
    interval = LatticePair(sigma, pi)
    return _mu(interval.lower, interval.upper)


def _upset(sigma: Partition) -> tuple[Partition, ...]:
    with _lock:
        cached = _upset_cache.get(sigma)
    if cached is not None:
        return cached
    ups = tuple(tau for tau in enumerate_nc(sigma.n) if leq(sigma, tau))
    with _lock:
        _upset_cache.setdefault(sigma, ups)
    return ups


def _leq_fast(sigma: Partition, owner: tuple[int, ...]) -> bool:
    for block in sigma.blocks:
        target = owner[block[0] - 1]
        for x in block[1:]:
            if owner[x - 1] != target:
                return False
    return True


def _mu(sigma: Partition, pi: Partition) -> int:
    if sigma == pi:
        return 1
    key = (sigma, pi)
    with _lock:
        cached = _mu_cache.get(key)
    if cached is not None:
        return cached
    owner = pi.block_map()
    below = [tau for tau in _upset(sigma) if tau != pi and _leq_fast(tau, owner)]
    value = -sum(_mu(sigma, tau) for tau in below)
    with _lock:
        _mu_cache.setdefault(key, value)
    return value
