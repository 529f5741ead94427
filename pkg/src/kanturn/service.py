"""HTTP service exposing distances, draws, isometry checks and sweeps.

The service is stateless: every request carries its full problem document.
Rationals travel as "num/den" strings so responses stay exact.
"""
from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from . import laws
from .core import Dist, Multiset, format_rational
from .draws import hypergeometric, multinomial, polya
from .metric import kantorovich, mset_kantorovich
from .problem import Label, ProblemError, ProblemModel, build_metric, build_space, resolve_object

app = FastAPI(title="kanturn", version="0.1.0",
              description="Exact Kantorovich distances over urns and draws")


def _mset_json(phi: Multiset) -> list:
    return [[x, n] for x, n in phi.items()]


def _potentials_json(values: dict) -> list:
    from .core import sort_key

    return [{"elem": x, "value": format_rational(values[x])}
            for x in sorted(values, key=sort_key)]


class CouplingCell(BaseModel):
    left: Label
    right: Label
    weight: str


class IntegerCell(BaseModel):
    left: Label
    right: Label
    count: int


class PotentialEntry(BaseModel):
    elem: Label
    value: str


class DistanceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    problem: ProblemModel
    left: str
    right: str


class DistanceResponse(BaseModel):
    kind: Literal["dists", "urns"]
    cost: str
    coupling: list[CouplingCell]
    integer_coupling: Optional[list[IntegerCell]] = None
    pot_p: list[PotentialEntry]
    pot_p_prime: list[PotentialEntry]
    witness_q: list[PotentialEntry]


class DrawRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    problem: ProblemModel
    mode: Literal["mn", "hg", "pol"]
    source: str
    k: int = Field(ge=0)


class DrawRow(BaseModel):
    draw: list
    prob: str


class DrawResponse(BaseModel):
    mode: str
    k: int
    rows: list[DrawRow]


class IsometryRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    problem: ProblemModel
    mode: Literal["mn", "hg", "pol"]
    left: str
    right: str
    k: int = Field(ge=1)


class IsometryResponse(BaseModel):
    mode: str
    k: int
    base: str
    nested: str
    matched: bool


class CheckEntry(BaseModel):
    name: str
    ok: bool
    detail: str = ""


class UrnSweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    problem: ProblemModel
    urn: str
    k: int = Field(ge=1)
    schedule: Optional[list[int]] = None
    threshold_div: int = 10


class UrnSweepRow(BaseModel):
    parameter: int
    hg_distance: str
    pol_distance: str
    hg_ratio_dev: str
    pol_ratio_dev: str
    hg_threshold: str
    pol_threshold: str


class UrnSweepResponse(BaseModel):
    rows: list[UrnSweepRow]
    checks: list[CheckEntry]
    csv: str


class DrawSweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    problem: ProblemModel
    dist: str
    k_schedule: Optional[list[int]] = None
    reference: Optional[str] = None


class DrawSweepRow(BaseModel):
    parameter: int
    tvd_value: str
    kantorovich_value: str
    bound: float
    reference_value: Optional[str] = None


class DrawSweepResponse(BaseModel):
    rows: list[DrawSweepRow]
    checks: list[CheckEntry]
    csv: str


class PolyaDirichletRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    problem: ProblemModel
    urn: str
    k: int = Field(ge=1)
    samples: int = Field(ge=2)
    seed: int = 0
    distance: Literal["tvd", "kantorovich"] = "tvd"
    slack: float = 0.05
    grid_max: int = Field(default=0, ge=0)
    grid_samples: int = Field(default=2000, ge=2)


class GridCellModel(BaseModel):
    i: int
    j: int
    estimate: float
    stderr: float


class PolyaDirichletResponse(BaseModel):
    exact_validity: str
    mc_mean: float
    mc_stderr: float
    checks: list[CheckEntry]
    grid: list[GridCellModel]
    csv: str


def _context(problem: ProblemModel):
    space = build_space(problem)
    metric = build_metric(problem, space)
    return space, metric


def _bad_request(err: Exception):
    raise HTTPException(status_code=400, detail=str(err))


@app.get("/healthz")
def healthz():
    return {"status": "ok"}


@app.post("/distance", response_model=DistanceResponse)
def distance(req: DistanceRequest) -> DistanceResponse:
    try:
        space, metric = _context(req.problem)
        left = resolve_object(req.problem, req.left, space)
        right = resolve_object(req.problem, req.right, space)
        if type(left) is not type(right):
            raise ProblemError(f"{req.left!r} and {req.right!r} are not the same kind of object")
        if isinstance(left, Multiset):
            result = mset_kantorovich(left, right, metric)
            transport = result.transport
            integer = [IntegerCell(left=x, right=y, count=n)
                       for (x, y), n in result.coupling.items()]
            kind = "urns"
        else:
            transport = kantorovich(left, right, metric)
            integer = None
            kind = "dists"
    except (ProblemError, ValueError) as err:
        _bad_request(err)
    if transport is None:
        return DistanceResponse(kind=kind, cost="0", coupling=[], integer_coupling=integer,
                                pot_p=[], pot_p_prime=[], witness_q=[])
    return DistanceResponse(
        kind=kind,
        cost=format_rational(transport.cost),
        coupling=[CouplingCell(left=x, right=y, weight=format_rational(w))
                  for (x, y), w in transport.coupling.items()],
        integer_coupling=integer,
        pot_p=_potentials_json(transport.pot_p),
        pot_p_prime=_potentials_json(transport.pot_p_prime),
        witness_q=_potentials_json(transport.witness_q),
    )


@app.post("/draw", response_model=DrawResponse)
def draw(req: DrawRequest) -> DrawResponse:
    try:
        space, _ = _context(req.problem)
        source = resolve_object(req.problem, req.source, space)
        if req.mode == "mn":
            if not isinstance(source, Dist):
                raise ProblemError("multinomial drawing needs a distribution")
            draws = multinomial(source, req.k)
        else:
            if not isinstance(source, Multiset):
                raise ProblemError("hypergeometric/Polya drawing needs an urn")
            draws = hypergeometric(source, req.k) if req.mode == "hg" else polya(source, req.k)
    except (ProblemError, ValueError) as err:
        _bad_request(err)
    rows = [DrawRow(draw=_mset_json(phi), prob=format_rational(w)) for phi, w in draws.items()]
    return DrawResponse(mode=req.mode, k=req.k, rows=rows)


@app.post("/isometry", response_model=IsometryResponse)
def isometry(req: IsometryRequest) -> IsometryResponse:
    try:
        space, metric = _context(req.problem)
        left = resolve_object(req.problem, req.left, space)
        right = resolve_object(req.problem, req.right, space)
        report = laws.isometry_check(req.mode, left, right, req.k, metric)
    except (ProblemError, ValueError) as err:
        _bad_request(err)
    return IsometryResponse(mode=req.mode, k=req.k,
                            base=format_rational(report.base_cost),
                            nested=format_rational(report.nested_cost),
                            matched=report.matched)


@app.post("/sweep/urn", response_model=UrnSweepResponse)
def sweep_urn(req: UrnSweepRequest) -> UrnSweepResponse:
    try:
        space, metric = _context(req.problem)
        urn = resolve_object(req.problem, req.urn, space)
        if not isinstance(urn, Multiset):
            raise ProblemError("urn sweep needs an urn")
        schedule = req.schedule if req.schedule else list(laws.DEFAULT_URN_SCHEDULE)
        rows = laws.large_urn_sweep(urn, req.k, metric, schedule,
                                    threshold_div=req.threshold_div, check=False)
    except (ProblemError, ValueError) as err:
        _bad_request(err)
    checks = [CheckEntry(name="law-of-large-urns", ok=True)]
    try:
        laws.check_urn_rows(rows)
    except laws.CheckFailed as err:
        checks = [CheckEntry(name="law-of-large-urns", ok=False, detail=str(err))]
    return UrnSweepResponse(
        rows=[UrnSweepRow(parameter=r.scale,
                          hg_distance=format_rational(r.hg_distance),
                          pol_distance=format_rational(r.pol_distance),
                          hg_ratio_dev=format_rational(r.hg_ratio_dev),
                          pol_ratio_dev=format_rational(r.pol_ratio_dev),
                          hg_threshold=format_rational(r.hg_threshold),
                          pol_threshold=format_rational(r.pol_threshold))
              for r in rows],
        checks=checks,
        csv=laws.urn_sweep_csv(rows),
    )


@app.post("/sweep/draw", response_model=DrawSweepResponse)
def sweep_draw(req: DrawSweepRequest) -> DrawSweepResponse:
    try:
        space, metric = _context(req.problem)
        dist = resolve_object(req.problem, req.dist, space)
        if not isinstance(dist, Dist):
            raise ProblemError("draw sweep needs a distribution")
        reference = None
        if req.reference is not None:
            reference = resolve_object(req.problem, req.reference, space)
        k_schedule = (req.k_schedule if req.k_schedule
                      else laws.default_draw_schedule(len(dist.support)))
        rows = laws.large_draw_sweep(dist, metric, k_schedule,
                                     reference=reference, check=False)
    except (ProblemError, ValueError) as err:
        _bad_request(err)
    checks = [CheckEntry(name="law-of-large-draws", ok=True)]
    try:
        laws.check_draw_rows(rows)
    except laws.CheckFailed as err:
        checks = [CheckEntry(name="law-of-large-draws", ok=False, detail=str(err))]
    return DrawSweepResponse(
        rows=[DrawSweepRow(parameter=r.draw_size,
                           tvd_value=format_rational(r.tvd_value),
                           kantorovich_value=format_rational(r.kantorovich_value),
                           bound=r.bound,
                           reference_value=None if r.reference_value is None
                           else format_rational(r.reference_value))
              for r in rows],
        checks=checks,
        csv=laws.draw_sweep_csv(rows),
    )


@app.post("/polya-dirichlet", response_model=PolyaDirichletResponse)
def polya_dirichlet(req: PolyaDirichletRequest) -> PolyaDirichletResponse:
    try:
        space, metric = _context(req.problem)
        urn = resolve_object(req.problem, req.urn, space)
        if not isinstance(urn, Multiset):
            raise ProblemError("Polya/Dirichlet comparison needs an urn")
        cfg = laws.McConfig(sample_count=req.samples, rng_seed=req.seed,
                            distance=req.distance)
        estimate = laws.polya_dirichlet_mc(urn, cfg, metric=metric)
        exact = laws.polya_validity(urn, req.k, metric=metric, distance=req.distance)
    except (ProblemError, ValueError) as err:
        _bad_request(err)
    checks = []
    try:
        laws.check_polya_limit(exact, estimate, req.k, slack=req.slack)
        checks.append(CheckEntry(name="polya-dirichlet-limit", ok=True))
    except laws.CheckFailed as err:
        checks.append(CheckEntry(name="polya-dirichlet-limit", ok=False, detail=str(err)))
    grid_cells = []
    csv = laws.dirichlet_grid_csv([], req.grid_samples, req.seed)
    if req.grid_max:
        cells = laws.polya_dirichlet_grid(req.grid_max, req.grid_samples, req.seed)
        grid_cells = [GridCellModel(i=c.i, j=c.j, estimate=c.estimate, stderr=c.stderr)
                      for c in cells]
        csv = laws.dirichlet_grid_csv(cells, req.grid_samples, req.seed)
    return PolyaDirichletResponse(
        exact_validity=format_rational(exact),
        mc_mean=estimate.mean,
        mc_stderr=estimate.stderr,
        checks=checks,
        grid=grid_cells,
        csv=csv,
    )
