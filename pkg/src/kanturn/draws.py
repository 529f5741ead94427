"""The three draw channels and their single-step decompositions.

Closed-form probability mass functions are the production path; the channel
composites (iterated draw-delete, sequence-Polya, the parallel multinomial
law) are kept as independent constructions so the two routes can be checked
against each other exactly.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .core import (
    Dist,
    Multiset,
    acc,
    acc_preimage,
    arr,
    binom,
    coefm,
    dist_unit,
    enumerate_msets,
    enumerate_sub_msets,
    flrn,
    kleisli_push,
    multichoose,
    tensor_tuple,
)

MULTINOMIAL = "multinomial"
HYPERGEOMETRIC = "hypergeometric"
POLYA = "polya"


class DrawDist(Dist):
    """A distribution over size-K draws, tagged with its drawing mode."""

    __slots__ = ("mode", "draw_size")

    def __init__(self, weights, mode: str, draw_size: int):
        super().__init__(weights)
        self.mode = mode
        self.draw_size = draw_size


# ---------------------------------------------------------------------------
# closed forms

def multinomial_pmf(omega: Dist, phi: Multiset) -> Fraction:
    """coefm(phi) * prod omega(x)^phi(x)."""
    out = Fraction(coefm(phi))
    for x, n in phi.items():
        out *= omega.prob(x) ** n
    return out


def multinomial(omega: Dist, k: int) -> DrawDist:
    """Draw-and-replace: K accumulated independent draws from omega."""
    if k < 0:
        raise ValueError("draw size must be a natural number")
    weights = {phi: multinomial_pmf(omega, phi)
               for phi in enumerate_msets(omega.support, k)}
    return DrawDist(weights, MULTINOMIAL, k)


def hypergeometric(upsilon: Multiset, k: int) -> DrawDist:
    """Draw-and-delete: size-K sub-multisets of the urn.

    pmf(phi) = prod binom(upsilon(x), phi(x)) / binom(L, K).
    """
    total = upsilon.size
    if k > total:
        raise ValueError(f"overdraw: cannot draw {k} from an urn of size {total}")
    if k < 0:
        raise ValueError("draw size must be a natural number")
    denom = binom(total, k)
    weights = {}
    for phi in enumerate_sub_msets(upsilon, k):
        num = 1
        for x, n in phi.items():
            num *= binom(upsilon(x), n)
        weights[phi] = Fraction(num, denom)
    return DrawDist(weights, HYPERGEOMETRIC, k)


def polya(upsilon: Multiset, k: int) -> DrawDist:
    """Draw-and-add: multichoose weights over draws supported in the urn."""
    total = upsilon.size
    if total == 0:
        raise ValueError("Polya drawing needs a non-empty urn")
    if k < 0:
        raise ValueError("draw size must be a natural number")
    denom = multichoose(total, k)
    weights = {}
    for phi in enumerate_msets(upsilon.support, k):
        num = 1
        for x, n in phi.items():
            num *= multichoose(upsilon(x), n)
        weights[phi] = Fraction(num, denom)
    return DrawDist(weights, POLYA, k)


# ---------------------------------------------------------------------------
# single-step channels

def dd(psi: Multiset) -> Dist:
    """Draw-delete: remove one ball with its frequency as probability."""
    if psi.size == 0:
        raise ValueError("draw-delete from an empty multiset")
    freq = flrn(psi)
    return Dist({psi - Multiset({x: 1}): freq.prob(x) for x in psi.support})


def pd(t: Sequence) -> Dist:
    """Projection-delete: drop one position of a tuple, uniformly."""
    t = tuple(t)
    if not t:
        raise ValueError("projection-delete from an empty tuple")
    k = len(t)
    weights: dict = {}
    for i in range(k):
        shorter = t[:i] + t[i + 1:]
        weights[shorter] = weights.get(shorter, Fraction(0)) + Fraction(1, k)
    return Dist(weights)


def hypergeometric_via_dd(upsilon: Multiset, k: int) -> DrawDist:
    """Hypergeometric drawing as an (L-K)-fold iteration of draw-delete."""
    total = upsilon.size
    if k > total:
        raise ValueError(f"overdraw: cannot draw {k} from an urn of size {total}")
    state = dist_unit(upsilon)
    for _ in range(total - k):
        state = kleisli_push(dd, state)
    return DrawDist(dict(state.items()), HYPERGEOMETRIC, k)


def psa(xs: Sequence, ys: Sequence) -> Dist:
    """Projection-store-add: pick a source position uniformly from the
    concatenation, insert a copy at a uniform position of the store."""
    xs, ys = tuple(xs), tuple(ys)
    pool = xs + ys
    if not pool:
        raise ValueError("projection-store-add needs a non-empty pool")
    n = len(ys)
    w = Fraction(1, len(pool) * (n + 1))
    weights: dict = {}
    for z in pool:
        for j in range(n + 1):
            state = (xs, ys[:j] + (z,) + ys[j:])
            weights[state] = weights.get(state, Fraction(0)) + w
    return Dist(weights)


def seqpolya(xs: Sequence, k: int) -> Dist:
    """Sequence Polya: the store marginal of K projection-store-add steps
    started from an empty store."""
    xs = tuple(xs)
    if not xs:
        raise ValueError("sequence Polya needs a non-empty pool")
    state = dist_unit((xs, ()))
    for _ in range(k):
        state = kleisli_push(lambda pair: psa(pair[0], pair[1]), state)
    return state.map(lambda pair: pair[1])


def polya_via_seqpolya(upsilon: Multiset, k: int) -> DrawDist:
    """Polya drawing as accumulate after sequence-Polya after arrange."""
    if upsilon.size == 0:
        raise ValueError("Polya drawing needs a non-empty urn")
    weights: dict = {}
    for xs, w in arr(upsilon).items():
        for ys, v in seqpolya(xs, k).items():
            phi = acc(ys)
            weights[phi] = weights.get(phi, Fraction(0)) + w * v
    return DrawDist(weights, POLYA, k)


# ---------------------------------------------------------------------------
# multiset zip and the parallel multinomial law

def mzip(phi: Multiset, psi: Multiset, cap: int = 8) -> Dist:
    """Distribution over integer couplings of two equal-size multisets:
    arrange both, zip, accumulate."""
    if phi.size != psi.size:
        raise ValueError(f"multiset sizes differ: {phi.size} vs {psi.size}")
    lefts = acc_preimage(phi, cap=cap)
    rights = acc_preimage(psi, cap=cap)
    w = Fraction(1, len(lefts) * len(rights))
    weights: dict = {}
    for xs in lefts:
        for ys in rights:
            tau = acc(tuple(zip(xs, ys)))
            weights[tau] = weights.get(tau, Fraction(0)) + w
    return Dist(weights)


def mzip_naive_distance(phi: Multiset, phi2: Multiset, d) -> Fraction:
    """Expected total ground cost of an mzip coupling.

    This averages instead of minimising, so it is NOT the Kantorovich
    distance between the multisets; it stays above the size-scaled optimum
    K * d(phi, phi').  Kept as a regression against conflating the two.
    """
    out = Fraction(0)
    for tau, w in mzip(phi, phi2).items():
        out += w * sum((Fraction(n) * d(x, y) for (x, y), n in tau.items()), Fraction(0))
    return out


def pml(phi: Multiset) -> Dist:
    """Parallel multinomial law: draw once from each distribution in the
    multiset and accumulate the results.

    The tensor of any fixed arrangement already gives the answer, because
    accumulation collapses the ordering.
    """
    dists = list(phi)
    for omega in dists:
        if not isinstance(omega, Dist):
            raise TypeError("pml expects a multiset of distributions")
    return tensor_tuple(dists).map(acc)


# ---------------------------------------------------------------------------
# multinomial moments

def mn_moment(omega: Dist, k: int, selector: str, y, z=None) -> Fraction:
    """Exact multinomial draw moments, evaluated by support enumeration.

    selector:
      "first"       E[phi(y)]
      "cross"       E[phi(y) * phi(z)] for distinct y, z
      "factorial"   E[phi(y) * (phi(y) - 1)]
      "flrn_square" E[(phi(y)/K)^2]
    """
    draws = multinomial(omega, k)
    if selector == "first":
        return draws.validity(lambda phi: Fraction(phi(y)))
    if selector == "cross":
        if z is None or z == y:
            raise ValueError("cross moment needs a second, distinct element")
        return draws.validity(lambda phi: Fraction(phi(y) * phi(z)))
    if selector == "factorial":
        return draws.validity(lambda phi: Fraction(phi(y) * (phi(y) - 1)))
    if selector == "flrn_square":
        return draws.validity(lambda phi: Fraction(phi(y), k) ** 2)
    raise ValueError(f"unknown moment selector {selector!r}")


# ---------------------------------------------------------------------------
# Kullback-Leibler divergence (the only log-valued, floating-point corner)

def kl_divergence(omega: Dist, omega2: Dist) -> float:
    """KL divergence in nats; +inf when the support condition fails."""
    out = 0.0
    for x, w in omega.items():
        v = omega2.prob(x)
        if v == 0:
            return math.inf
        out += float(w) * math.log(float(w) / float(v))
    return out


def kl_multinomial_check(omega: Dist, omega2: Dist, k: int) -> tuple[float, float]:
    """Return (KL between the K-draw multinomials, K * base KL)."""
    base = kl_divergence(omega, omega2)
    if math.isinf(base):
        return math.inf, math.inf
    left = multinomial(omega, k)
    right = multinomial(omega2, k)
    lhs = 0.0
    for phi, w in left.items():
        lhs += float(w) * math.log(float(w) / float(right.prob(phi)))
    return lhs, k * base
