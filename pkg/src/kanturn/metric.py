"""Ground metrics and the exact Kantorovich solver with dual certificates.

The solver is a transportation simplex over the bipartite support graph:
north-west-corner start, exact rational pivots, Bland's rule for entering
and leaving variables.  Optimal solutions are vertices of the transportation
polytope, so couplings of integer marginals come out integral and couplings
of distributions with denominators dividing K stay in steps of 1/K.

Every solve returns the full certificate: the optimal coupling, dual
potentials (p, p') with p(x) + p'(y) <= d(x, y) on the supports, and a
single nonnegative short witness factor q with |E_omega[q] - E_omega'[q]|
equal to the optimal cost.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .core import (
    Dist,
    Multiset,
    as_rational,
    sort_key,
)

DistanceFn = Callable[[object, object], Fraction]


class MetricError(ValueError):
    """An explicit matrix failed a metric axiom."""


class GroundMetric:
    """A metric on colour labels: discrete, numeric, or an explicit matrix.

    Numeric metrics keep their coordinate function around (``coord_fn``) so
    that one-dimensional transport shortcuts can use it.
    """

    __slots__ = ("kind", "_fn", "coord_fn")

    def __init__(self, kind: str, fn: DistanceFn, coord_fn=None):
        self.kind = kind
        self._fn = fn
        self.coord_fn = coord_fn

    def __call__(self, x, y) -> Fraction:
        return self._fn(x, y)

    def __repr__(self) -> str:
        return f"GroundMetric({self.kind})"

    @staticmethod
    def discrete() -> "GroundMetric":
        return GroundMetric("discrete", lambda x, y: Fraction(0) if x == y else Fraction(1))

    @staticmethod
    def numeric(space=None) -> "GroundMetric":
        """Absolute difference of coordinates (or of numeric labels)."""
        coord = Fraction if space is None else space.coord
        return GroundMetric("numeric", lambda x, y: abs(coord(x) - coord(y)), coord_fn=coord)

    @staticmethod
    def from_matrix(elems: Sequence, rows: Sequence[Sequence]) -> "GroundMetric":
        """Explicit matrix indexed by the element order; axioms are checked."""
        elems = tuple(elems)
        n = len(elems)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise MetricError(f"matrix must be {n}x{n} to match the space")
        table = {
            (elems[i], elems[j]): as_rational(rows[i][j])
            for i in range(n)
            for j in range(n)
        }
        metric = GroundMetric("matrix", lambda x, y: table[(x, y)])
        validate_metric(metric, elems)
        return metric


def validate_metric(d: DistanceFn, elems: Iterable) -> bool:
    """Exhaustively check separation, symmetry and the triangle inequality.

    Raises MetricError naming the offending pair or triple.
    """
    elems = tuple(elems)
    for x in elems:
        if d(x, x) != 0:
            raise MetricError(f"separation fails: d({x!r},{x!r}) = {d(x, x)} != 0")
    for x in elems:
        for y in elems:
            v = d(x, y)
            if v < 0:
                raise MetricError(f"negative distance d({x!r},{y!r}) = {v}")
            if x != y and v == 0:
                raise MetricError(f"separation fails: d({x!r},{y!r}) = 0 for distinct points")
            if v != d(y, x):
                raise MetricError(f"symmetry fails at ({x!r},{y!r})")
    for x in elems:
        for y in elems:
            for z in elems:
                if d(x, z) > d(x, y) + d(y, z):
                    raise MetricError(
                        f"triangle inequality fails at ({x!r},{y!r},{z!r}): "
                        f"{d(x, z)} > {d(x, y)} + {d(y, z)}"
                    )
    return True


def tuple_dist(s: Sequence, t: Sequence, d: DistanceFn) -> Fraction:
    """Product metric on tuples: the sum of componentwise distances."""
    if len(s) != len(t):
        raise ValueError(f"tuple length mismatch: {len(s)} vs {len(t)}")
    return sum((d(a, b) for a, b in zip(s, t)), Fraction(0))


def sum_metric(d1: DistanceFn, d2: DistanceFn) -> DistanceFn:
    """Metric on pairs: d((x1,x2),(y1,y2)) = d1(x1,y1) + d2(x2,y2)."""
    return lambda a, b: d1(a[0], b[0]) + d2(a[1], b[1])


def diameter(elems: Iterable, d: DistanceFn) -> Fraction:
    elems = tuple(elems)
    if not elems:
        raise ValueError("diameter of the empty set")
    return max(d(x, y) for x in elems for y in elems)


# ---------------------------------------------------------------------------
# transportation simplex

def _northwest_basis(supply: list[Fraction], demand: list[Fraction]):
    """North-west-corner start: exactly m+n-1 basic cells, zeros allowed."""
    m, n = len(supply), len(demand)
    a, b = list(supply), list(demand)
    alloc: dict[tuple[int, int], Fraction] = {}
    i = j = 0
    while True:
        q = a[i] if a[i] < b[j] else b[j]
        alloc[(i, j)] = q
        a[i] -= q
        b[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if a[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    return alloc


def _potentials(basis, cost, m, n):
    """Node potentials u, v with u_i + v_j = c_ij on the basis tree."""
    adj: dict[int, list[tuple[int, tuple[int, int]]]] = {k: [] for k in range(m + n)}
    for (i, j) in basis:
        adj[i].append((m + j, (i, j)))
        adj[m + j].append((i, (i, j)))
    u = [None] * m
    v = [None] * n
    u[0] = Fraction(0)
    stack = [0]
    while stack:
        node = stack.pop()
        for nxt, (i, j) in adj[node]:
            if nxt < m:
                if u[nxt] is None:
                    u[nxt] = cost[i][j] - v[j]
                    stack.append(nxt)
            else:
                if v[nxt - m] is None:
                    v[nxt - m] = cost[i][j] - u[i]
                    stack.append(nxt)
    if any(x is None for x in u) or any(x is None for x in v):
        raise RuntimeError("basis graph is not spanning; solver invariant broken")
    return u, v


def _cycle(basis, entering, m):
    """Unique cycle created by the entering cell, as an alternating cell list.

    The returned list starts with the entering cell; even positions gain
    theta, odd positions lose it.
    """
    i0, j0 = entering
    adj: dict[int, list[tuple[int, tuple[int, int]]]] = {}
    for (i, j) in basis:
        adj.setdefault(i, []).append((m + j, (i, j)))
        adj.setdefault(m + j, []).append((i, (i, j)))
    target = m + j0
    # DFS for the tree path row i0 -> col j0
    path_cells = None
    stack = [(i0, None, [])]
    seen = {i0}
    while stack:
        node, _, cells = stack.pop()
        if node == target:
            path_cells = cells
            break
        for nxt, cell in adj.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append((nxt, node, cells + [cell]))
    if path_cells is None:
        raise RuntimeError("no cycle found; solver invariant broken")
    return [entering] + list(reversed(path_cells))


def solve_transport(supply: Sequence[Fraction], demand: Sequence[Fraction],
                    cost: Sequence[Sequence[Fraction]]):
    """Exact transportation simplex.

    Returns (alloc, u, v, total): the optimal basic allocation (a dict over
    basic cells, zero allocations included), the dual potentials per row and
    column, and the total cost.  Bland's rule (lowest-index entering and
    leaving variables) prevents cycling.
    """
    supply = [Fraction(s) for s in supply]
    demand = [Fraction(t) for t in demand]
    if sum(supply) != sum(demand):
        raise ValueError("supply and demand totals differ")
    m, n = len(supply), len(demand)
    alloc = _northwest_basis(supply, demand)
    basis = set(alloc)
    while True:
        u, v = _potentials(basis, cost, m, n)
        entering = None
        for i in range(m):
            row = cost[i]
            ui = u[i]
            for j in range(n):
                if (i, j) not in basis and row[j] - ui - v[j] < 0:
                    entering = (i, j)
                    break
            if entering is not None:
                break
        if entering is None:
            break
        cycle = _cycle(basis, entering, m)
        minus = cycle[1::2]
        theta = min(alloc[c] for c in minus)
        leaving = min((c for c in minus if alloc[c] == theta))
        alloc[entering] = Fraction(0)
        for idx, c in enumerate(cycle):
            if idx % 2 == 0:
                alloc[c] += theta
            else:
                alloc[c] -= theta
        del alloc[leaving]
        basis.add(entering)
        basis.discard(leaving)
    total = sum((q * cost[i][j] for (i, j), q in alloc.items()), Fraction(0))
    return alloc, u, v, total


# ---------------------------------------------------------------------------
# Kantorovich distance between distributions

@dataclass(frozen=True)
class TransportResult:
    """Optimal cost plus the primal and dual certificates.

    The coupling is an optimal vertex of the transportation polytope; the
    potentials satisfy p(x) + p'(y) <= d(x, y) on the supports and their
    expectations sum to the cost; the witness q is a nonnegative short
    factor whose expectation gap equals the cost.
    """

    cost: Fraction
    coupling: Dist
    pot_p: dict
    pot_p_prime: dict
    witness_q: dict

    def dual_value(self, omega: Dist, omega2: Dist) -> Fraction:
        return omega.validity(self.pot_p) + omega2.validity(self.pot_p_prime)

    def witness_gap(self, omega: Dist, omega2: Dist) -> Fraction:
        return abs(omega.validity(self.witness_q) - omega2.validity(self.witness_q))

    def verify(self, omega: Dist, omega2: Dist, d: DistanceFn) -> bool:
        """Check every certificate identity exactly."""
        left = self.coupling.map(lambda xy: xy[0])
        right = self.coupling.map(lambda xy: xy[1])
        if left != omega or right != omega2:
            return False
        if self.coupling.validity(lambda xy: d(*xy)) != self.cost:
            return False
        if self.dual_value(omega, omega2) != self.cost:
            return False
        if self.witness_gap(omega, omega2) != self.cost:
            return False
        for x in omega.support:
            for y in omega2.support:
                if self.pot_p[x] + self.pot_p_prime[y] > d(x, y):
                    return False
        elems = list(self.witness_q)
        for x in elems:
            if self.witness_q[x] < 0:
                return False
            for y in elems:
                if abs(self.witness_q[x] - self.witness_q[y]) > d(x, y):
                    return False
        return True


def _identity_result(omega: Dist) -> TransportResult:
    zero = Fraction(0)
    return TransportResult(
        cost=zero,
        coupling=Dist({(x, x): w for x, w in omega.items()}),
        pot_p={x: zero for x in omega.support},
        pot_p_prime={x: zero for x in omega.support},
        witness_q={x: zero for x in omega.support},
    )


def kantorovich(omega: Dist, omega2: Dist, d: DistanceFn) -> TransportResult:
    """Exact Kantorovich distance with primal and dual certificates.

    Equal inputs short-circuit to cost zero with the identity coupling.
    The dual potentials are anchored so that p vanishes on the first support
    element of omega (the dual objective is invariant under this shift).
    """
    if omega == omega2:
        return _identity_result(omega)
    rows = list(omega.support)
    cols = list(omega2.support)
    cost = [[d(x, y) for y in cols] for x in rows]
    alloc, u, v, total = solve_transport(
        [omega.prob(x) for x in rows], [omega2.prob(y) for y in cols], cost
    )
    anchor = u[0]
    pot_p = {x: u[i] - anchor for i, x in enumerate(rows)}
    pot_pp = {y: v[j] + anchor for j, y in enumerate(cols)}
    coupling = Dist({(rows[i], cols[j]): q for (i, j), q in alloc.items() if q})
    union = sorted(set(rows) | set(cols), key=sort_key)
    witness = {x: min(d(x, y) - pot_p[y] for y in rows) for x in union}
    low = min(witness.values())
    witness = {x: q - low for x, q in witness.items()}
    return TransportResult(total, coupling, pot_p, pot_pp, witness)


def kantorovich_cost(omega: Dist, omega2: Dist, d: DistanceFn) -> Fraction:
    return kantorovich(omega, omega2, d).cost


# ---------------------------------------------------------------------------
# total variation distance

def tvd(omega: Dist, omega2: Dist) -> Fraction:
    """Half the pointwise L1 distance."""
    union = set(omega.support) | set(omega2.support)
    return sum((abs(omega.prob(x) - omega2.prob(x)) for x in union), Fraction(0)) / 2


def tvd_coupling(omega: Dist, omega2: Dist) -> Dist:
    """The explicit optimal coupling for the discrete metric.

    Diagonal mass min(omega, omega'), off-diagonal mass proportional to the
    positive parts.  For equal inputs (where the off-diagonal formula is
    undefined) the identity coupling is returned.
    """
    if omega == omega2:
        return Dist({(x, x): w for x, w in omega.items()})
    t = tvd(omega, omega2)
    union = sorted(set(omega.support) | set(omega2.support), key=sort_key)
    weights: dict = {}
    for x in union:
        lo = min(omega.prob(x), omega2.prob(x))
        if lo:
            weights[(x, x)] = lo
    for x in union:
        up = omega.prob(x) - omega2.prob(x)
        if up <= 0:
            continue
        for y in union:
            down = omega2.prob(y) - omega.prob(y)
            if down > 0:
                weights[(x, y)] = up * down / t
    return Dist(weights)


def tvd_bound_check(omega: Dist, omega2: Dist, d: DistanceFn):
    """Return (Kantorovich cost, D * tvd) and insist the bound holds."""
    lhs = kantorovich(omega, omega2, d).cost
    big = max(d(x, y) for x in omega.support for y in omega2.support)
    rhs = big * tvd(omega, omega2)
    if lhs > rhs:
        raise RuntimeError(f"total-variation bound violated: {lhs} > {rhs}")
    return lhs, rhs


# ---------------------------------------------------------------------------
# Kantorovich distance between multisets

@dataclass(frozen=True)
class MsetTransport:
    """Multiset distance: normalised cost, an integer optimal coupling, and
    the distribution-level certificate for the normalised problem."""

    cost: Fraction
    coupling: Multiset
    transport: Optional[TransportResult]


def mset_kantorovich(phi: Multiset, phi2: Multiset, d: DistanceFn) -> MsetTransport:
    """Distance between equal-size multisets, with an integer optimal coupling.

    Solved as a transportation problem with the raw counts as marginals; the
    optimal vertex is integral, and dividing by K gives the normalised
    coupling whose expected ground distance is the distance.  Size zero is 0
    by convention.
    """
    if phi.size != phi2.size:
        raise ValueError(f"multiset sizes differ: {phi.size} vs {phi2.size}")
    k = phi.size
    if k == 0:
        return MsetTransport(Fraction(0), Multiset(), None)
    rows = list(phi.support)
    cols = list(phi2.support)
    cost = [[d(x, y) for y in cols] for x in rows]
    alloc, u, v, total = solve_transport(
        [Fraction(phi(x)) for x in rows], [Fraction(phi2(y)) for y in cols], cost
    )
    coupling = Multiset({(rows[i], cols[j]): int(q) for (i, j), q in alloc.items() if q})
    anchor = u[0]
    pot_p = {x: u[i] - anchor for i, x in enumerate(rows)}
    pot_pp = {y: v[j] + anchor for j, y in enumerate(cols)}
    union = sorted(set(rows) | set(cols), key=sort_key)
    witness = {x: min(d(x, y) - pot_p[y] for y in rows) for x in union}
    low = min(witness.values())
    witness = {x: q - low for x, q in witness.items()}
    result = TransportResult(
        cost=total / k,
        coupling=Dist({(rows[i], cols[j]): q / k for (i, j), q in alloc.items() if q}),
        pot_p=pot_p,
        pot_p_prime=pot_pp,
        witness_q=witness,
    )
    return MsetTransport(total / k, coupling, result)


def dcpl(tau: Multiset) -> tuple[Multiset, Multiset]:
    """Decouple a multiset over pairs into its two marginals."""
    left: dict = {}
    right: dict = {}
    for (x, y), n in tau.items():
        left[x] = left.get(x, 0) + n
        right[y] = right.get(y, 0) + n
    return Multiset(left), Multiset(right)


def couplings_enumerate(phi: Multiset, psi: Multiset, cap: int = 5) -> set[Multiset]:
    """All integer couplings of two equal-size multisets.

    Generated as accumulations of zipped preimage pairs, which is exactly
    the coupling set; exponential in K, so capped.
    """
    if phi.size != psi.size:
        raise ValueError(f"multiset sizes differ: {phi.size} vs {psi.size}")
    if phi.size > cap:
        raise ValueError(f"coupling enumeration capped at size {cap}, got {phi.size}")
    from .core import acc, acc_preimage

    out: set[Multiset] = set()
    lefts = acc_preimage(phi, cap=cap)
    rights = acc_preimage(psi, cap=cap)
    for xs in lefts:
        for ys in rights:
            out.add(acc(tuple(zip(xs, ys))))
    return out


def mset_kantorovich_enumerated(phi: Multiset, psi: Multiset, d: DistanceFn,
                                cap: int = 5) -> Fraction:
    """Brute-force multiset distance: minimise over all integer couplings."""
    if phi.size == 0:
        return Fraction(0)
    k = phi.size
    best = None
    for tau in couplings_enumerate(phi, psi, cap=cap):
        value = sum((Fraction(n) * d(x, y) for (x, y), n in tau.items()), Fraction(0)) / k
        if best is None or value < best:
            best = value
    return best


# ---------------------------------------------------------------------------
# nested distance (distributions over multisets)

class MsetDistanceCache:
    """Memoised multiset ground distances, keyed by the unordered pair.

    Reads are lock-free; inserts are serialised so the cache can be shared
    across worker threads.
    """

    def __init__(self, d: DistanceFn):
        self._d = d
        self._memo: dict = {}
        self._lock = threading.Lock()

    def distance(self, phi: Multiset, psi: Multiset) -> Fraction:
        if phi == psi:
            return Fraction(0)
        key = (phi, psi) if sort_key(phi) <= sort_key(psi) else (psi, phi)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        value = mset_kantorovich(phi, psi, self._d).cost
        with self._lock:
            self._memo.setdefault(key, value)
        return value

    def __call__(self, phi: Multiset, psi: Multiset) -> Fraction:
        return self.distance(phi, psi)

    def __len__(self) -> int:
        return len(self._memo)


def nested_kantorovich(big: Dist, big2: Dist, d: DistanceFn,
                       cache: MsetDistanceCache | None = None) -> TransportResult:
    """Kantorovich distance between distributions over equal-size multisets,
    with the multiset Kantorovich metric as ground distance.

    A supplied cache takes precedence: its stored metric is used for the
    ground distances, so pass a cache built over the same ``d``.
    """
    sizes = {phi.size for phi in big.support} | {phi.size for phi in big2.support}
    if len(sizes) > 1:
        raise ValueError(f"mixed multiset sizes in nested distance: {sorted(sizes)}")
    ground = cache if cache is not None else MsetDistanceCache(d)
    return kantorovich(big, big2, ground)


def fractionality_check(omega: Dist, omega2: Dist, k: int, d: DistanceFn) -> bool:
    """Verify the optimal vertex coupling of D[K] inputs lives in D[K].

    Inputs must have all weights in steps of 1/K.  Non-vertex optimal
    couplings can sit strictly outside D[K]; the solver only ever reports
    vertices, so this should always hold.
    """
    for dist in (omega, omega2):
        for _, w in dist.items():
            if (w * k).denominator != 1:
                raise ValueError(f"input weight {w} is not a multiple of 1/{k}")
    result = kantorovich(omega, omega2, d)
    return all((w * k).denominator == 1 for _, w in result.coupling.items())
