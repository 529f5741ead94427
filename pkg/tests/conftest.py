"""Shared fixtures: seeded random instance generators and brute-force oracles."""
from __future__ import annotations

import random
from fractions import Fraction

from kanturn import (
    Dist,
    GroundMetric,
    Multiset,
    acc_preimage,
    tuple_dist,
)


def random_multiset(rnd: random.Random, labels, size: int) -> Multiset:
    """Uniformly coloured urn of the given size (support may be partial)."""
    return Multiset.from_elements(rnd.choice(list(labels)) for _ in range(size))


def random_full_multiset(rnd: random.Random, labels, size: int) -> Multiset:
    """Urn of the given size with every label present at least once."""
    labels = list(labels)
    if size < len(labels):
        raise ValueError("size must cover all labels")
    base = list(labels)
    base += [rnd.choice(labels) for _ in range(size - len(labels))]
    return Multiset.from_elements(base)


def random_dist(rnd: random.Random, labels, max_denominator: int = 12) -> Dist:
    """Distribution with weights n/q for a single q <= max_denominator."""
    labels = list(labels)
    q = rnd.randint(1, max_denominator)
    support_size = rnd.randint(1, min(len(labels), q))
    support = rnd.sample(labels, support_size)
    # a composition of q into support_size positive parts
    cuts = sorted(rnd.sample(range(1, q), support_size - 1)) if support_size > 1 else []
    parts = [b - a for a, b in zip([0] + cuts, cuts + [q])]
    return Dist({x: Fraction(n, q) for x, n in zip(support, parts)})


def full_support_dist(rnd: random.Random, labels, denominator: int) -> Dist:
    """Distribution giving positive n/denominator mass to every label."""
    labels = list(labels)
    cuts = (sorted(rnd.sample(range(1, denominator), len(labels) - 1))
            if len(labels) > 1 else [])
    parts = [b - a for a, b in zip([0] + cuts, cuts + [denominator])]
    return Dist({x: Fraction(n, denominator) for x, n in zip(labels, parts)})


def random_metric(rnd: random.Random, labels) -> GroundMetric:
    """Discrete, numeric-coordinate, or shortest-path-closed matrix metric."""
    labels = list(labels)
    kind = rnd.choice(["discrete", "numeric", "matrix"])
    if kind == "discrete":
        return GroundMetric.discrete()
    if kind == "numeric":
        from kanturn import Space

        scale = Fraction(1, rnd.randint(1, 4))
        coords = rnd.sample(range(0, 40), len(labels))
        space = Space(labels, {x: c * scale for x, c in zip(labels, coords)})
        return GroundMetric.numeric(space)
    n = len(labels)
    scale = Fraction(1, rnd.randint(1, 4))
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            rows[i][j] = rows[j][i] = rnd.randint(1, 9) * scale
    for k in range(n):  # shortest-path closure enforces the triangle inequality
        for i in range(n):
            for j in range(n):
                via = rows[i][k] + rows[k][j]
                if via < rows[i][j]:
                    rows[i][j] = via
    return GroundMetric.from_matrix(labels, rows)


def alignment_distance(phi: Multiset, psi: Multiset, d) -> Fraction:
    """Independent oracle for the multiset distance: minimise the averaged
    componentwise distance over all pairs of arrangements."""
    k = phi.size
    if k == 0:
        return Fraction(0)
    best = None
    for xs in acc_preimage(phi):
        for ys in acc_preimage(psi):
            value = tuple_dist(xs, ys, d) / k
            if best is None or value < best:
                best = value
    return best
