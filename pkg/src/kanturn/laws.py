"""Experiment harness: isometry checks, limit-law sweeps, Dirichlet sampling.

Exact columns are rationals and reproduce bit-identically; Monte Carlo
columns use a seeded, named generator (numpy PCG64) so CSV output is stable
across runs and platforms.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import Dist, Multiset, flrn, format_rational, multichoose
from .draws import DrawDist, hypergeometric, multinomial, polya
from .metric import (
    DistanceFn,
    MsetDistanceCache,
    TransportResult,
    kantorovich,
    kantorovich_cost,
    mset_kantorovich,
    nested_kantorovich,
    tvd,
)


class CheckFailed(RuntimeError):
    """A law-level assertion (convergence, bound, interval) did not hold."""


#: Geometric urn-scale schedule used when a sweep does not specify one.
DEFAULT_URN_SCHEDULE = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)


def default_draw_schedule(n_colours: int, cap: int = 50_000, hard_max: int = 32) -> list[int]:
    """Contiguous draw sizes 1..K_max with per-size enumeration under the cap.

    The hard maximum keeps small colour spaces (where the multichoose count
    grows slowly) from producing absurdly long schedules.
    """
    out = []
    k = 1
    while k <= hard_max and multichoose(n_colours, k) <= cap:
        out.append(k)
        k += 1
    if not out:
        raise ValueError("enumeration cap excludes even a single draw")
    return out


# ---------------------------------------------------------------------------
# isometry verification

@dataclass(frozen=True)
class IsometryReport:
    mode: str
    draw_size: int
    base_cost: Fraction
    nested_cost: Fraction
    matched: bool
    base: object
    nested: TransportResult


def isometry_check(mode: str, left, right, k: int, metric: DistanceFn,
                   cache: MsetDistanceCache | None = None) -> IsometryReport:
    """Compare the base distance with the nested distance of the K-draws.

    mode "mn" takes two distributions; "hg" and "pol" take two equal-size
    urns.  The report carries both transport certificates.
    """
    if mode == "mn":
        if not isinstance(left, Dist) or not isinstance(right, Dist):
            raise ValueError("multinomial isometry check takes two distributions")
        base = kantorovich(left, right, metric)
        base_cost = base.cost
        draws_l: DrawDist = multinomial(left, k)
        draws_r: DrawDist = multinomial(right, k)
    elif mode in ("hg", "pol"):
        if not isinstance(left, Multiset) or not isinstance(right, Multiset):
            raise ValueError("urn isometry checks take two multisets")
        if left.size != right.size:
            raise ValueError(f"urn sizes differ: {left.size} vs {right.size}")
        if mode == "hg":
            if k > left.size:
                raise ValueError(f"overdraw: {k} from urns of size {left.size}")
            draws_l, draws_r = hypergeometric(left, k), hypergeometric(right, k)
        else:
            draws_l, draws_r = polya(left, k), polya(right, k)
        base = mset_kantorovich(left, right, metric)
        base_cost = base.cost
    else:
        raise ValueError(f"unknown draw mode {mode!r}")
    nested = nested_kantorovich(draws_l, draws_r, metric, cache=cache)
    return IsometryReport(mode, k, base_cost, nested.cost, base_cost == nested.cost,
                          base, nested)


# ---------------------------------------------------------------------------
# law of large urns

@dataclass(frozen=True)
class UrnSweepRow:
    scale: int
    hg_distance: Fraction
    pol_distance: Fraction
    hg_ratio_dev: Fraction
    pol_ratio_dev: Fraction
    #: decade-drop targets: first-row distance / threshold_div
    hg_threshold: Fraction
    pol_threshold: Fraction


def _ratio_deviation(mn_draws: Dist, other: Dist) -> Fraction:
    """Largest |mn(phi)/other(phi) - 1| over draws both assign mass to."""
    worst = Fraction(0)
    for phi, w in mn_draws.items():
        v = other.prob(phi)
        if v == 0:
            continue
        dev = abs(w / v - 1)
        if dev > worst:
            worst = dev
    return worst


def large_urn_sweep(upsilon: Multiset, k: int, metric: DistanceFn,
                    schedule: Sequence[int], threshold_div: int = 10,
                    check: bool = True) -> list[UrnSweepRow]:
    """Distances between scaled-urn draws and the fixed multinomial.

    For each n, computes the nested Kantorovich distances between the
    hypergeometric and Polya draws from n * upsilon and the multinomial draw
    from Flrn(upsilon) (which is scale invariant), plus the worst pointwise
    pmf ratio deviations.  With check enabled, the final distances must fall
    below the first row's value divided by threshold_div.
    """
    if k < 1 or upsilon.size < k:
        raise ValueError("need urn size >= draw size >= 1")
    if not schedule:
        raise ValueError("empty schedule")
    cache = MsetDistanceCache(metric)
    mn_draws = multinomial(flrn(upsilon), k)
    measured = []
    for n in schedule:
        scaled = upsilon.scale(n)
        hg_draws = hypergeometric(scaled, k)
        pol_draws = polya(scaled, k)
        measured.append((
            n,
            nested_kantorovich(hg_draws, mn_draws, metric, cache=cache).cost,
            nested_kantorovich(pol_draws, mn_draws, metric, cache=cache).cost,
            _ratio_deviation(mn_draws, hg_draws),
            _ratio_deviation(mn_draws, pol_draws),
        ))
    hg_bound = measured[0][1] / threshold_div
    pol_bound = measured[0][2] / threshold_div
    rows = [UrnSweepRow(n, hg, pol, hg_dev, pol_dev, hg_bound, pol_bound)
            for n, hg, pol, hg_dev, pol_dev in measured]
    if check:
        check_urn_rows(rows)
    return rows


def check_urn_rows(rows: Sequence[UrnSweepRow]) -> None:
    """The convergence surrogate: last distance below first, and below the
    per-channel threshold.  The limit laws promise no rate, so a configurable
    decade drop stands in for "goes to zero"."""
    first, last = rows[0], rows[-1]
    for name, bound in (("hg_distance", last.hg_threshold),
                        ("pol_distance", last.pol_threshold)):
        a, b = getattr(first, name), getattr(last, name)
        if not (b < a):
            raise CheckFailed(f"{name} did not decrease: {a} -> {b}")
        if not (b < bound):
            raise CheckFailed(
                f"{name} at n={last.scale} is {b}, not below the threshold {bound}")


# ---------------------------------------------------------------------------
# law of large draws

@dataclass(frozen=True)
class DrawSweepRow:
    draw_size: int
    tvd_value: Fraction
    kantorovich_value: Fraction
    bound: float
    reference_value: Optional[Fraction]


def variance_bound(omega: Dist, k: int) -> float:
    """(1/2) sum_y sqrt(omega(y)(1-omega(y))/K), the proof-side envelope for
    the expected total variation between draw frequencies and the urn."""
    return 0.5 * sum(math.sqrt(float(w * (1 - w)) / k) for _, w in omega.items())


def large_draw_sweep(omega: Dist, metric: DistanceFn, k_schedule: Sequence[int],
                     reference: Dist | None = None, enumeration_cap: int = 50_000,
                     check: bool = True) -> list[DrawSweepRow]:
    """Expected distance between an urn and its normalised multinomial draws.

    Per draw size K the rows carry the exact expectation under both the
    total variation and the Kantorovich ground distance, the variance-based
    float bound, and (optionally) the expected Kantorovich distance to a
    reference distribution, whose large-K limit is the base distance.
    """
    if not k_schedule:
        raise ValueError("empty draw-size schedule")
    n = len(omega.support)
    rows = []
    for k in k_schedule:
        if k < 1:
            raise ValueError("draw sizes must be positive")
        if multichoose(n, k) > enumeration_cap:
            raise ValueError(f"draw size {k} exceeds the enumeration cap {enumeration_cap}")
        draws = multinomial(omega, k)
        value_tvd = draws.validity(lambda phi: tvd(omega, flrn(phi)))
        value_kant = draws.validity(lambda phi: kantorovich_cost(omega, flrn(phi), metric))
        ref_value = None
        if reference is not None:
            ref_value = draws.validity(
                lambda phi: kantorovich_cost(flrn(phi), reference, metric))
        rows.append(DrawSweepRow(k, value_tvd, value_kant, variance_bound(omega, k), ref_value))
    if check:
        check_draw_rows(rows)
    return rows


def check_draw_rows(rows: Sequence[DrawSweepRow]) -> None:
    """Every value under its variance bound, and decreasing endpoints."""
    for row in rows:
        if float(row.tvd_value) > row.bound + 1e-12:
            raise CheckFailed(
                f"tvd value {row.tvd_value} exceeds bound {row.bound} at K={row.draw_size}")
    first, last = rows[0], rows[-1]
    if len(rows) > 1:
        if not (last.tvd_value < first.tvd_value):
            raise CheckFailed("tvd column did not decrease across the schedule")
        if not (last.kantorovich_value < first.kantorovich_value):
            raise CheckFailed("Kantorovich column did not decrease across the schedule")


# ---------------------------------------------------------------------------
# Polya / Dirichlet limit

@dataclass(frozen=True)
class McConfig:
    sample_count: int
    rng_seed: int
    distance: str = "tvd"  # "tvd" or "kantorovich"


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    sample_count: int
    rng_seed: int
    distance: str


def polya_validity(upsilon: Multiset, k: int, metric: DistanceFn | None = None,
                   distance: str = "tvd") -> Fraction:
    """Exact expected distance between normalised Polya draws and the urn."""
    target = flrn(upsilon)
    draws = polya(upsilon, k)
    if distance == "tvd":
        return draws.validity(lambda phi: tvd(flrn(phi), target))
    if distance == "kantorovich":
        if metric is None:
            raise ValueError("kantorovich validity needs a ground metric")
        return draws.validity(lambda phi: kantorovich_cost(flrn(phi), target, metric))
    raise ValueError(f"unknown distance kind {distance!r}")


def _dirichlet_samples(counts: Sequence[int], sample_count: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Dirichlet via normalised independent gamma draws."""
    alpha = np.asarray(counts, dtype=float)
    gam = rng.standard_gamma(alpha, size=(sample_count, len(alpha)))
    return gam / gam.sum(axis=1, keepdims=True)


def _float_dist(labels, values) -> Dist:
    """Exact distribution from a float vector (binary values, renormalised)."""
    fracs = [Fraction(float(v)) for v in values]
    total = sum(fracs)
    return Dist({x: f / total for x, f in zip(labels, fracs) if f > 0})


def polya_dirichlet_mc(upsilon: Multiset, cfg: McConfig,
                       metric: DistanceFn | None = None) -> McEstimate:
    """Monte Carlo estimate of the Dirichlet expectation that the large-draw
    Polya validity converges to.

    tvd and discrete-metric runs are fully vectorised; numeric metrics use
    the one-dimensional transport formula (area between CDFs); explicit
    matrix metrics fall back to one exact solve per sample.
    """
    labels = upsilon.support
    counts = [upsilon(x) for x in labels]
    rng = np.random.default_rng(cfg.rng_seed)
    samples = _dirichlet_samples(counts, cfg.sample_count, rng)
    target = np.array([c / upsilon.size for c in counts], dtype=float)
    if cfg.distance == "tvd" or (cfg.distance == "kantorovich"
                                 and getattr(metric, "kind", None) == "discrete"):
        dists = 0.5 * np.abs(samples - target).sum(axis=1)
    elif cfg.distance == "kantorovich":
        if metric is None:
            raise ValueError("kantorovich sampling needs a ground metric")
        coord_fn = getattr(metric, "coord_fn", None)
        if coord_fn is not None:
            coords = np.array([float(coord_fn(x)) for x in labels])
            order = np.argsort(coords, kind="stable")
            cum = np.cumsum(samples[:, order] - target[order], axis=1)[:, :-1]
            dists = (np.abs(cum) * np.diff(coords[order])).sum(axis=1)
        else:
            exact_target = flrn(upsilon)
            dists = np.empty(len(samples))
            for idx, row in enumerate(samples):
                dists[idx] = float(
                    kantorovich_cost(_float_dist(labels, row), exact_target, metric))
    else:
        raise ValueError(f"unknown distance kind {cfg.distance!r}")
    mean = float(dists.mean())
    stderr = (float(dists.std(ddof=1) / math.sqrt(cfg.sample_count))
              if cfg.sample_count > 1 else 0.0)
    return McEstimate(mean, stderr, cfg.sample_count, cfg.rng_seed, cfg.distance)


def check_polya_limit(exact: Fraction, estimate: McEstimate, k: int,
                      slack: float = 0.05) -> None:
    """Exact finite-K Polya validity must sit inside the MC 99% interval
    widened by a slack term covering the finite-K gap."""
    half_width = 2.576 * estimate.stderr + slack
    if abs(float(exact) - estimate.mean) > half_width:
        raise CheckFailed(
            f"Polya validity {float(exact):.6f} at K={k} is outside "
            f"{estimate.mean:.6f} +/- {half_width:.6f}")


@dataclass(frozen=True)
class GridCell:
    i: int
    j: int
    estimate: float
    stderr: float


def polya_dirichlet_grid(grid_max: int, sample_count: int, rng_seed: int,
                         labels=("a", "b")) -> list[GridCell]:
    """Dirichlet tvd expectations for all binary urns i|a> + j|b>.

    Cells get independent substreams derived from the root seed, row-major,
    so the grid is reproducible regardless of evaluation order.
    """
    seeds = np.random.SeedSequence(rng_seed).spawn(grid_max * grid_max)
    cells = []
    for i in range(1, grid_max + 1):
        for j in range(1, grid_max + 1):
            rng = np.random.default_rng(seeds[(i - 1) * grid_max + (j - 1)])
            samples = _dirichlet_samples([i, j], sample_count, rng)
            target = np.array([i / (i + j), j / (i + j)])
            dists = 0.5 * np.abs(samples - target).sum(axis=1)
            stderr = (float(dists.std(ddof=1) / math.sqrt(sample_count))
                      if sample_count > 1 else 0.0)
            cells.append(GridCell(i, j, float(dists.mean()), stderr))
    return cells


# ---------------------------------------------------------------------------
# coefficient limits

@dataclass(frozen=True)
class CoefficientRow:
    n: int
    falling: Fraction
    rising: Fraction


def coefficient_limit_probe(m: int, n_schedule: Sequence[int],
                            check: bool = True) -> list[CoefficientRow]:
    """Tabulate n!/((n-m)! n^m) and (n+m-1)!/((n-1)! n^m); both tend to 1.

    With check enabled, the schedule must end at n >= 100 m and both columns
    must be within 0.01 of 1 there.
    """
    if m < 0:
        raise ValueError("m must be a natural number")
    rows = []
    for n in n_schedule:
        if n < 1 or n < m:
            raise ValueError(f"need n >= max(1, m), got n={n}")
        falling = Fraction(1)
        rising = Fraction(1)
        for t in range(m):
            falling *= Fraction(n - t, n)
            rising *= Fraction(n + t, n)
        rows.append(CoefficientRow(n, falling, rising))
    if check and m > 0:
        last = rows[-1]
        if last.n < 100 * m:
            raise ValueError(f"schedule must end at n >= 100*m = {100 * m}")
        for name in ("falling", "rising"):
            value = getattr(last, name)
            if abs(value - 1) > Fraction(1, 100):
                raise CheckFailed(f"{name} coefficient {value} not within 0.01 of 1 at n={last.n}")
    return rows


# ---------------------------------------------------------------------------
# CSV emission

def _csv(header: Sequence[str], rows: Sequence[Sequence], meta: str | None = None) -> str:
    """Deterministic CSV: rationals as num/den, floats via repr."""
    buf = io.StringIO()
    if meta:
        buf.write(f"# {meta}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        rendered = []
        for value in row:
            if isinstance(value, Fraction):
                rendered.append(format_rational(value))
            elif isinstance(value, float):
                rendered.append(repr(value))
            elif value is None:
                rendered.append("")
            else:
                rendered.append(str(value))
        buf.write(",".join(rendered) + "\n")
    return buf.getvalue()


def urn_sweep_csv(rows: Sequence[UrnSweepRow]) -> str:
    return _csv(
        ["parameter", "hg_distance", "pol_distance", "hg_ratio_dev", "pol_ratio_dev",
         "hg_threshold", "pol_threshold"],
        [(r.scale, r.hg_distance, r.pol_distance, r.hg_ratio_dev, r.pol_ratio_dev,
          r.hg_threshold, r.pol_threshold)
         for r in rows],
    )


def draw_sweep_csv(rows: Sequence[DrawSweepRow]) -> str:
    return _csv(
        ["parameter", "tvd_value", "kantorovich_value", "bound", "reference_value"],
        [(r.draw_size, r.tvd_value, r.kantorovich_value, r.bound, r.reference_value)
         for r in rows],
    )


def dirichlet_grid_csv(cells: Sequence[GridCell], sample_count: int, rng_seed: int) -> str:
    return _csv(
        ["i", "j", "estimate", "stderr"],
        [(c.i, c.j, c.estimate, c.stderr) for c in cells],
        meta=f"distance=tvd samples={sample_count} seed={rng_seed}",
    )


def coefficient_csv(rows: Sequence[CoefficientRow]) -> str:
    return _csv(["parameter", "falling", "rising"],
                [(r.n, r.falling, r.rising) for r in rows])
