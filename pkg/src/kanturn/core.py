"""Exact multiset and distribution algebra over finite colour spaces.

Everything in this module is computed with ``fractions.Fraction``; there is
no floating point anywhere.  Multisets ("urns", "draws") map elements to
natural multiplicities, distributions map elements to positive rationals
summing to exactly one.  Both are immutable and hashable, so distributions
over multisets, over tuples, over pairs, and even over distributions all
work with the same machinery.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence, Union

RationalLike = Union[int, str, Fraction]

#: Default cap on the size of multisets whose accumulation preimage we are
#: willing to materialise (the preimage grows like K!).
PREIMAGE_CAP = 8


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and exact "a/b" strings to Fraction.

    Floats are rejected on purpose: a float literal silently breaks the
    exact-equality guarantees of this library.
    """
    if isinstance(value, bool):
        raise TypeError("bool is not a rational value")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected int, Fraction or 'a/b' string, got {value!r}")


def format_rational(q: Fraction) -> str:
    """Render a Fraction as "num/den" (or plain "num" for integers)."""
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def sort_key(x):
    """Total order over the element kinds we use as carriers.

    Numbers sort before strings, which sort before tuples, multisets and
    distributions.  The order is only used to make iteration, enumeration
    and serialisation deterministic.
    """
    if isinstance(x, bool):
        return (0, Fraction(int(x)))
    if isinstance(x, (int, Fraction)):
        return (0, Fraction(x))
    if isinstance(x, str):
        return (1, x)
    if isinstance(x, tuple):
        return (3, tuple(sort_key(item) for item in x))
    if isinstance(x, Multiset):
        return (4, tuple((sort_key(e), n) for e, n in x.items()))
    if isinstance(x, Dist):
        return (5, tuple((sort_key(e), w) for e, w in x.items()))
    return (9, repr(x))


class Space:
    """A finite ordered set of colour labels, optionally with coordinates.

    The construction order is the canonical order used for enumeration and
    rendering.  Coordinates (rational numbers attached to labels) feed the
    numeric ground metric.
    """

    __slots__ = ("_elems", "_index", "_coords")

    def __init__(self, elems: Iterable, coords: Mapping | None = None):
        elems = tuple(elems)
        if len(set(elems)) != len(elems):
            raise ValueError("space labels must be distinct")
        self._elems = elems
        self._index = {x: i for i, x in enumerate(elems)}
        if coords is None:
            self._coords = None
        else:
            unknown = [x for x in coords if x not in self._index]
            if unknown:
                raise ValueError(f"coords given for labels not in the space: {unknown}")
            self._coords = {x: as_rational(v) for x, v in coords.items()}

    @property
    def elems(self) -> tuple:
        return self._elems

    def index(self, x) -> int:
        return self._index[x]

    def coord(self, x) -> Fraction:
        """Numeric coordinate of a label: explicit coords win, numeric labels fall back to themselves."""
        if self._coords is not None and x in self._coords:
            return self._coords[x]
        if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
            return Fraction(x)
        raise ValueError(f"label {x!r} has no numeric coordinate")

    def __iter__(self) -> Iterator:
        return iter(self._elems)

    def __len__(self) -> int:
        return len(self._elems)

    def __contains__(self, x) -> bool:
        return x in self._index

    def __repr__(self) -> str:
        return f"Space({list(self._elems)!r})"


def _ket(x) -> str:
    return f"|{x}>"


class Multiset:
    """An immutable multiset: finite map from elements to positive counts."""

    __slots__ = ("_items", "_map", "_size", "_hash")

    def __init__(self, counts: Mapping | Iterable[tuple] = ()):
        pairs = counts.items() if isinstance(counts, Mapping) else counts
        acc: dict = {}
        for x, n in pairs:
            if not isinstance(n, int) or isinstance(n, bool):
                raise TypeError(f"multiplicity of {x!r} must be an int, got {n!r}")
            if n < 0:
                raise ValueError(f"negative multiplicity {n} for {x!r}")
            if n:
                acc[x] = acc.get(x, 0) + n
        items = tuple(sorted(acc.items(), key=lambda kv: sort_key(kv[0])))
        self._items = items
        self._map = dict(items)
        self._size = sum(acc.values())
        self._hash = hash(items)

    @classmethod
    def from_elements(cls, elems: Iterable) -> "Multiset":
        counts: dict = {}
        for x in elems:
            counts[x] = counts.get(x, 0) + 1
        return cls(counts)

    @property
    def size(self) -> int:
        return self._size

    @property
    def support(self) -> tuple:
        return tuple(x for x, _ in self._items)

    def items(self) -> tuple:
        return self._items

    def __call__(self, x) -> int:
        return self._map.get(x, 0)

    def __contains__(self, x) -> bool:
        return x in self._map

    def __iter__(self) -> Iterator:
        """Iterate elements with multiplicity (an urn's individual balls)."""
        for x, n in self._items:
            for _ in range(n):
                yield x

    def __add__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._map)
        for x, n in other.items():
            counts[x] = counts.get(x, 0) + n
        return Multiset(counts)

    def __sub__(self, other: "Multiset") -> "Multiset":
        counts = dict(self._map)
        for x, n in other.items():
            have = counts.get(x, 0)
            if n > have:
                raise ValueError(f"multiset subtraction underflow at {x!r}: {have} - {n}")
            counts[x] = have - n
        return Multiset(counts)

    def scale(self, n: int) -> "Multiset":
        if n < 0:
            raise ValueError("scale factor must be a natural number")
        return Multiset({x: n * k for x, k in self._items})

    def __rmul__(self, n: int) -> "Multiset":
        return self.scale(n)

    def __le__(self, other: "Multiset") -> bool:
        return all(n <= other(x) for x, n in self._items)

    def __eq__(self, other) -> bool:
        return isinstance(other, Multiset) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        if not self._items:
            return "0"
        return " + ".join(f"{n}{_ket(x)}" for x, n in self._items)


class Dist:
    """An immutable finite-support probability distribution.

    Weights are positive rationals summing to exactly one; zero weights are
    dropped at construction.  The carrier is generic: labels, tuples, pairs,
    multisets and distributions all work.
    """

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, weights: Mapping | Iterable[tuple]):
        pairs = weights.items() if isinstance(weights, Mapping) else weights
        acc: dict = {}
        for x, w in pairs:
            w = as_rational(w)
            if w < 0:
                raise ValueError(f"negative weight {w} for {x!r}")
            if w:
                acc[x] = acc.get(x, Fraction(0)) + w
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"weights must sum to exactly 1, got {total}")
        items = tuple(sorted(acc.items(), key=lambda kv: sort_key(kv[0])))
        self._items = items
        self._map = dict(items)
        self._hash = hash(items)

    @property
    def support(self) -> tuple:
        return tuple(x for x, _ in self._items)

    def items(self) -> tuple:
        return self._items

    def prob(self, x) -> Fraction:
        return self._map.get(x, Fraction(0))

    def __call__(self, x) -> Fraction:
        return self.prob(x)

    def __contains__(self, x) -> bool:
        return x in self._map

    def map(self, f: Callable) -> "Dist":
        """Pushforward along a plain function."""
        acc: dict = {}
        for x, w in self._items:
            y = f(x)
            acc[y] = acc.get(y, Fraction(0)) + w
        return Dist(acc)

    def validity(self, p) -> Fraction:
        """Expected value of an observation (callable or mapping)."""
        get = p.__getitem__ if isinstance(p, Mapping) else p
        return sum((w * as_rational(get(x)) for x, w in self._items), Fraction(0))

    def __eq__(self, other) -> bool:
        return isinstance(other, Dist) and self._items == other._items

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return " + ".join(f"{format_rational(w)}{_ket(x)}" for x, w in self._items)


Channel = Callable[[Hashable], Dist]


# ---------------------------------------------------------------------------
# combinatorics

def binom(n: int, k: int) -> int:
    """n over k; zero when k exceeds n."""
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def multichoose(n: int, k: int) -> int:
    """Number of multisets of size k over an n-element set."""
    if k == 0:
        return 1
    if n <= 0:
        return 0
    return math.comb(n + k - 1, k)


def coefm(phi: Multiset) -> int:
    """Number of sequences accumulating to phi: K! / prod of count factorials."""
    out = math.factorial(phi.size)
    for _, n in phi.items():
        out //= math.factorial(n)
    return out


# ---------------------------------------------------------------------------
# accumulation, arrangement, permutation

def acc(t: Sequence) -> Multiset:
    """Accumulate a tuple into the multiset of its entries."""
    return Multiset.from_elements(t)


def _distinct_permutations(pool: list, key) -> Iterator[tuple]:
    """Distinct permutations of a pool, lexicographic in the given key."""
    n = len(pool)
    if n == 0:
        yield ()
        return
    counts = {}
    for x in pool:
        counts[x] = counts.get(x, 0) + 1
    distinct = sorted(counts, key=key)
    out: list = []

    def rec():
        if len(out) == n:
            yield tuple(out)
            return
        for x in distinct:
            if counts[x]:
                counts[x] -= 1
                out.append(x)
                yield from rec()
                out.pop()
                counts[x] += 1

    yield from rec()


def acc_preimage(phi: Multiset, cap: int = PREIMAGE_CAP, order=None) -> list:
    """All tuples accumulating to phi, lexicographically.

    ``order`` may be a Space (lexicographic in space order) or None
    (canonical element order).  The preimage has coefm(phi) entries, so a
    size cap guards against factorial blow-up.
    """
    if phi.size > cap:
        raise ValueError(f"refusing to materialise preimage of size-{phi.size} multiset (cap {cap})")
    key = (lambda x: order.index(x)) if isinstance(order, Space) else sort_key
    return list(_distinct_permutations(list(phi), key))


def arr(phi: Multiset, cap: int = PREIMAGE_CAP) -> Dist:
    """Uniform distribution over the tuples accumulating to phi."""
    tuples = acc_preimage(phi, cap=cap)
    w = Fraction(1, len(tuples))
    return Dist({t: w for t in tuples})


def prm(t: Sequence, cap: int = PREIMAGE_CAP) -> Dist:
    """Uniform permutations of a tuple; equals arr after acc."""
    return arr(acc(t), cap=cap)


# ---------------------------------------------------------------------------
# the distribution monad

def dist_unit(x) -> Dist:
    return Dist({x: Fraction(1)})


def dist_flatten(big: Dist) -> Dist:
    """Flatten a distribution of distributions by averaging."""
    acc_w: dict = {}
    for inner, w in big.items():
        if not isinstance(inner, Dist):
            raise TypeError("dist_flatten expects a distribution over distributions")
        for x, v in inner.items():
            acc_w[x] = acc_w.get(x, Fraction(0)) + w * v
    return Dist(acc_w)


def kleisli_push(c: Channel, omega: Dist) -> Dist:
    """Push a distribution through a channel: flat after mapping."""
    acc_w: dict = {}
    for x, w in omega.items():
        for y, v in c(x).items():
            acc_w[y] = acc_w.get(y, Fraction(0)) + w * v
    return Dist(acc_w)


def channel_compose(d: Channel, c: Channel) -> Channel:
    """Kleisli composition: first c, then d."""
    return lambda x: kleisli_push(d, c(x))


def klin(f: Callable) -> Channel:
    """The deterministic channel of a plain function."""
    return lambda x: dist_unit(f(x))


def mix(parts: Iterable[tuple[RationalLike, Dist]]) -> Dist:
    """Convex combination of distributions."""
    acc_w: dict = {}
    for r, omega in parts:
        r = as_rational(r)
        for x, w in omega.items():
            acc_w[x] = acc_w.get(x, Fraction(0)) + r * w
    return Dist(acc_w)


# ---------------------------------------------------------------------------
# normalisation, tensors, observations

def flrn(phi: Multiset) -> Dist:
    """Frequentist learning: normalise a non-empty multiset."""
    if phi.size == 0:
        raise ValueError("cannot normalise the empty multiset")
    k = phi.size
    return Dist({x: Fraction(n, k) for x, n in phi.items()})


def tensor(omega: Dist, rho: Dist) -> Dist:
    """Product distribution over pairs."""
    return Dist({(x, y): w * v for x, w in omega.items() for y, v in rho.items()})


def tensor_tuple(dists: Sequence[Dist]) -> Dist:
    """K-ary product distribution over K-tuples."""
    if not dists:
        return dist_unit(())
    acc_w: dict = {(): Fraction(1)}
    for omega in dists:
        acc_w = {t + (x,): w * v for t, w in acc_w.items() for x, v in omega.items()}
    return Dist(acc_w)


def iid(omega: Dist, k: int) -> Dist:
    """K independent copies, as a distribution over K-tuples."""
    return tensor_tuple([omega] * k)


def mset_tensor(phi: Multiset, psi: Multiset) -> Multiset:
    """Product multiset over pairs, with multiplicities multiplied."""
    return Multiset({(x, y): n * m for x, n in phi.items() for y, m in psi.items()})


def validity(omega: Dist, p) -> Fraction:
    return omega.validity(p)


def variance(omega: Dist, p) -> Fraction:
    """Var = E[p^2] - E[p]^2, exactly."""
    get = p.__getitem__ if isinstance(p, Mapping) else p
    mean = Fraction(0)
    second = Fraction(0)
    for x, w in omega.items():
        v = as_rational(get(x))
        mean += w * v
        second += w * v * v
    return second - mean * mean


# ---------------------------------------------------------------------------
# enumeration

def enumerate_msets(elems, k: int) -> list[Multiset]:
    """All multisets of size k over the given elements (Space or sequence).

    Ordered by combinations-with-replacement over the element order, which
    is deterministic; the count is multichoose(len(elems), k).
    """
    pool = tuple(elems)
    return [Multiset.from_elements(combo)
            for combo in itertools.combinations_with_replacement(pool, k)]


def enumerate_sub_msets(upsilon: Multiset, k: int) -> list[Multiset]:
    """All size-k sub-multisets of an urn (the hypergeometric support)."""
    support = upsilon.support
    out: list[Multiset] = []

    def rec(idx: int, remaining: int, picked: list):
        if remaining == 0:
            out.append(Multiset(list(picked)))
            return
        if idx == len(support):
            return
        x = support[idx]
        available = upsilon(x)
        rest = sum(upsilon(support[j]) for j in range(idx + 1, len(support)))
        lo = max(0, remaining - rest)
        hi = min(available, remaining)
        for n in range(lo, hi + 1):
            picked.append((x, n))
            rec(idx + 1, remaining - n, picked)
            picked.pop()

    if k > upsilon.size:
        return []
    rec(0, k, [])
    return out
