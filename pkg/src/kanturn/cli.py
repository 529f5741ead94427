"""Command-line client for the kanturn service.

Each subcommand reads a YAML problem document, sends it to the service
(embedded in-process unless --url points at a running one), and renders the
response as aligned text or CSV.  Exit codes: 0 success, 1 a law-level check
or isometry assertion failed, 2 the problem document was invalid.
"""
from __future__ import annotations

import sys

import click
import httpx

from .problem import ProblemError, load_problem_document, problem_payload


def _client(url: str | None):
    if url:
        return httpx.Client(base_url=url, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # starlette warns about its httpx-based TestClient; embedded mode is
        # exactly that client, used deliberately.
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _load(spec_path: str, section: str) -> tuple[dict, dict]:
    try:
        doc = load_problem_document(spec_path)
        problem = problem_payload(doc)
    except ProblemError as err:
        click.echo(f"spec error: {err}", err=True)
        sys.exit(2)
    params = doc.get(section)
    if params is None:
        click.echo(f"spec error: missing section {section!r} in {spec_path}", err=True)
        sys.exit(2)
    if not isinstance(params, dict):
        click.echo(f"spec error: section {section!r} must be a mapping", err=True)
        sys.exit(2)
    return problem, params


def _post(client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        click.echo(f"spec error: {detail}", err=True)
        sys.exit(2)
    return response.json()


def _fmt_mset(pairs) -> str:
    return " + ".join(f"{n}|{x}>" for x, n in pairs) if pairs else "0"


def _print_table(title: str, rows: list[tuple[str, str]]):
    if not rows:
        return
    click.echo(f"{title}:")
    width = max(len(left) for left, _ in rows)
    for left, right in rows:
        click.echo(f"  {left.ljust(width)}  {right}")


def _emit_checks(checks) -> bool:
    ok = True
    for check in checks:
        status = "PASS" if check["ok"] else "FAIL"
        detail = f"  {check['detail']}" if check.get("detail") else ""
        click.echo(f"CHECK {check['name']} {status}{detail}")
        ok = ok and check["ok"]
    return ok


def _write_out(out: str | None, text: str):
    if out:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


spec_option = click.option("--spec", "spec_path", required=True,
                           type=click.Path(exists=True, dir_okay=False),
                           help="YAML problem document")
url_option = click.option("--url", default=None,
                          help="base URL of a running service (default: in-process)")
out_option = click.option("--out", "out_path", default=None,
                          type=click.Path(dir_okay=False), help="CSV output path")


@click.group()
def main():
    """Exact Kantorovich distances over urns and draws."""


@main.command()
@spec_option
@url_option
def distance(spec_path, url):
    """Distance between two named objects, with all certificates."""
    problem, params = _load(spec_path, "distance")
    data = _post(_client(url), "/distance", {"problem": problem, **params})
    click.echo(f"distance = {data['cost']}")
    _print_table("optimal coupling",
                 [(f"{c['left']} -> {c['right']}", c["weight"]) for c in data["coupling"]])
    if data.get("integer_coupling"):
        _print_table("integer coupling",
                     [(f"{c['left']} -> {c['right']}", str(c["count"]))
                      for c in data["integer_coupling"]])
    _print_table("dual potential p", [(str(p["elem"]), p["value"]) for p in data["pot_p"]])
    _print_table("dual potential p'",
                 [(str(p["elem"]), p["value"]) for p in data["pot_p_prime"]])
    _print_table("witness factor q", [(str(p["elem"]), p["value"]) for p in data["witness_q"]])


@main.command()
@spec_option
@url_option
def draw(spec_path, url):
    """Tabulate a draw distribution."""
    problem, params = _load(spec_path, "draw")
    data = _post(_client(url), "/draw", {"problem": problem, **params})
    click.echo(f"{data['mode']} draws of size {data['k']}:")
    rows = [(_fmt_mset(r["draw"]), r["prob"]) for r in data["rows"]]
    width = max(len(left) for left, _ in rows) if rows else 0
    for left, right in rows:
        click.echo(f"  {left.ljust(width)}  {right}")


@main.command()
@spec_option
@url_option
def isometry(spec_path, url):
    """Check that drawing preserves the distance, exactly."""
    problem, params = _load(spec_path, "isometry")
    data = _post(_client(url), "/isometry", {"problem": problem, **params})
    if data["matched"]:
        click.echo(f"PASS {data['base']} = {data['nested']}")
    else:
        click.echo(f"FAIL {data['base']} != {data['nested']}")
        sys.exit(1)


@main.command(name="sweep-urn")
@spec_option
@url_option
@out_option
@click.option("--threshold-div", default=None, type=int,
              help="override the convergence threshold divisor")
def sweep_urn(spec_path, url, out_path, threshold_div):
    """Scaled-urn convergence sweep (hypergeometric and Polya vs multinomial)."""
    problem, params = _load(spec_path, "sweep_urn")
    if threshold_div is not None:
        params = {**params, "threshold_div": threshold_div}
    data = _post(_client(url), "/sweep/urn", {"problem": problem, **params})
    _write_out(out_path, data["csv"])
    if not _emit_checks(data["checks"]):
        sys.exit(1)


@main.command(name="sweep-draw")
@spec_option
@url_option
@out_option
def sweep_draw(spec_path, url, out_path):
    """Growing-draw convergence sweep for a distribution."""
    problem, params = _load(spec_path, "sweep_draw")
    data = _post(_client(url), "/sweep/draw", {"problem": problem, **params})
    _write_out(out_path, data["csv"])
    if not _emit_checks(data["checks"]):
        sys.exit(1)


@main.command(name="polya-dirichlet")
@spec_option
@url_option
@out_option
@click.option("--seed", default=None, type=int, help="override the RNG seed")
@click.option("--samples", default=None, type=int, help="override the sample count")
def polya_dirichlet(spec_path, url, out_path, seed, samples):
    """Compare exact Polya validity with the sampled Dirichlet limit."""
    problem, params = _load(spec_path, "polya_dirichlet")
    if seed is not None:
        params = {**params, "seed": seed}
    if samples is not None:
        params = {**params, "samples": samples}
    data = _post(_client(url), "/polya-dirichlet", {"problem": problem, **params})
    click.echo(f"exact validity (K={params.get('k')}) = {data['exact_validity']}")
    click.echo(f"mc estimate = {data['mc_mean']!r} +/- {data['mc_stderr']!r}")
    if data["grid"]:
        _write_out(out_path, data["csv"])
    if not _emit_checks(data["checks"]):
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("kanturn.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
