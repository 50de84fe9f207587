"""Command-line front end.

Exit codes: 0 success, 1 computational failure, 2 usage or input error.
All artifacts embed the configuration and case hashes and contain no
timestamps, so identical configurations produce byte-identical files.
"""

from __future__ import annotations

import functools
import hashlib
import json
import os
import sys
import time

import click
import numpy as np

from . import __version__
from .analysis import (FlexibilitySpec, build_atc_polytope,
                       compare_utilization, exported_flexibility,
                       export_polytope, nodal_deviation_report, prepare)
from .constraints import compute_delta_limits
from .errors import CaseError, GridflexError
from .network import ReserveConfig, load_case, partition, scale_load
from .polytope import (HPolytope, project, remove_redundant, vertices_2d,
                       write_vertices_csv)
from .sensitivity import compute_dc_flows

_EXIT_COMPUTE = 1
_EXIT_USAGE = 2


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _sanitize(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in label)


def _guard(fn):
    """Map package errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CaseError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_EXIT_USAGE)
        except GridflexError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_EXIT_COMPUTE)

    return wrapper


def case_options(fn):
    fn = click.option("--case", "case_path", required=True,
                      type=click.Path(), help="Case file (JSON).")(fn)
    fn = click.option("--scale", default=1.0, show_default=True,
                      help="Uniform load scale factor in (0, 1].")(fn)
    fn = click.option("--reserves", "reserve_mode", default="file",
                      type=click.Choice(["file", "full", "fraction"]),
                      show_default=True,
                      help="How generator reserve bands are derived.")(fn)
    fn = click.option("--reserve-fraction", default=0.0, show_default=True,
                      help="Band as a fraction of the setpoint "
                           "(mode 'fraction').")(fn)
    fn = click.option("--reserve-units", default=None,
                      help="Comma-separated unit ids allowed to provide "
                           "reserves (default: all).")(fn)
    return fn


def spec_options(fn):
    fn = click.option("--approach", default="active", show_default=True,
                      type=click.Choice(["active", "passive"]))(fn)
    fn = click.option("--security", default="n", show_default=True,
                      type=click.Choice(["n", "n1"]))(fn)
    fn = click.option("--gen-outages", default=None,
                      help="Comma-separated unit ids (default: every "
                           "dispatched unit).")(fn)
    fn = click.option("--line-outages", default=None,
                      help="Comma-separated line ids (default: every "
                           "non-bridge study-area line).")(fn)
    fn = click.option("--strict-line-outages", is_flag=True, default=False,
                      help="Bound physical post-outage flows instead of the "
                           "redistribution term alone.")(fn)
    return fn


@click.group()
@click.version_option(__version__)
@click.option("--out-dir", default=None, envvar="GRIDFLEX_OUT_DIR",
              show_default="current directory",
              help="Directory for output artifacts (env: GRIDFLEX_OUT_DIR).")
@click.option("--feas-tol", default=1e-8, show_default=True,
              help="LP feasibility tolerance.")
@click.option("--redund-tol", default=1e-7, show_default=True,
              help="Redundancy-removal tolerance.")
@click.option("--contain-tol", default=1e-6, show_default=True,
              help="Containment check tolerance.")
@click.option("--row-cap", default=200_000, show_default=True,
              help="Abort threshold for intermediate projection rows.")
@click.pass_context
def main(ctx, out_dir, feas_tol, redund_tol, contain_tol, row_cap):
    """Flexibility polytopes for two-area DC power systems."""
    for name, value in (("feas-tol", feas_tol), ("redund-tol", redund_tol),
                        ("contain-tol", contain_tol)):
        if value <= 0:
            raise click.UsageError(f"--{name} must be positive")
    if feas_tol != 1e-8:
        from .lp import set_feasibility_tolerance

        set_feasibility_tolerance(feas_tol)
    ctx.obj = {
        "out_dir": out_dir or ".",
        "feas_tol": feas_tol,
        "redund_tol": redund_tol,
        "contain_tol": contain_tol,
        "row_cap": row_cap,
    }


def _load(ctx, case_path, scale, reserve_mode, reserve_fraction, reserve_units):
    if not 0.0 < scale <= 1.0:
        raise CaseError(f"--scale must lie in (0, 1], got {scale}")
    case = load_case(case_path)
    if scale != 1.0:
        case = scale_load(case, scale)
    units = None
    if reserve_units:
        units = tuple(u.strip() for u in reserve_units.split(",") if u.strip())
    reserves = ReserveConfig(mode=reserve_mode, fraction=reserve_fraction,
                             units=units)
    config = {
        "case_hash": case.case_hash(),
        "scale": scale,
        "reserves": reserves.describe(),
        "redund_tol": ctx.obj["redund_tol"],
        "row_cap": ctx.obj["row_cap"],
    }
    return case, reserves, config


def _spec(reserves, approach, security, gen_outages, line_outages,
          strict_line_outages) -> FlexibilitySpec:
    split = lambda s: tuple(x.strip() for x in s.split(",") if x.strip())
    return FlexibilitySpec(
        approach=approach,
        security=security,
        reserves=reserves,
        gen_outages=split(gen_outages) if gen_outages else None,
        line_outages=split(line_outages) if line_outages else None,
        strict_line_outages=strict_line_outages,
    )


def _out_path(ctx, name: str) -> str:
    out_dir = ctx.obj["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


@main.command()
@case_options
@spec_options
@click.pass_context
@_guard
def build(ctx, case_path, scale, reserve_mode, reserve_fraction, reserve_units,
          approach, security, gen_outages, line_outages, strict_line_outages):
    """Build the flexibility set and its tie-deviation projection."""
    case, reserves, config = _load(ctx, case_path, scale, reserve_mode,
                                   reserve_fraction, reserve_units)
    spec = _spec(reserves, approach, security, gen_outages, line_outages,
                 strict_line_outages)
    config["spec"] = spec.describe()
    meta = {"config_hash": _config_hash(config),
            "case_hash": config["case_hash"], "tool": f"gridflex {__version__}"}

    from .analysis import assemble_constraints, polytope_from_block

    block, view = assemble_constraints(case, spec)
    flex = polytope_from_block(block, view, spec.approach)
    started = time.perf_counter()
    fe = export_polytope(flex, view, spec, tol=ctx.obj["redund_tol"],
                         row_cap=ctx.obj["row_cap"])
    elapsed = time.perf_counter() - started

    set_path = _out_path(ctx, "flexibility_set.json")
    block.dump_json(set_path, meta=meta)
    poly_path = _out_path(ctx, "external_polytope.json")
    fe.dump_json(poly_path, meta=meta)

    click.echo(f"{'stage':<28}{'rows':>8}")
    click.echo(f"{'assembled constraints':<28}{block.nrows:>8}")
    click.echo(f"{'flexibility set (dims)':<28}{flex.dim:>8}")
    click.echo(f"{'projected tie polytope':<28}{fe.poly.nrows:>8}")
    click.echo(f"projection time: {elapsed:.2f} s")
    click.echo(f"wrote {set_path}")
    click.echo(f"wrote {poly_path}")


@main.command()
@case_options
@spec_options
@click.pass_context
@_guard
def metrics(ctx, case_path, scale, reserve_mode, reserve_fraction,
            reserve_units, approach, security, gen_outages, line_outages,
            strict_line_outages):
    """Exported flexibility: pairwise projection areas and their sum."""
    case, reserves, config = _load(ctx, case_path, scale, reserve_mode,
                                   reserve_fraction, reserve_units)
    spec = _spec(reserves, approach, security, gen_outages, line_outages,
                 strict_line_outages)
    config["spec"] = spec.describe()
    meta = {"config_hash": _config_hash(config),
            "case_hash": config["case_hash"], "tool": f"gridflex {__version__}"}

    from .analysis import external_polytope

    fe = external_polytope(case, spec, tol=ctx.obj["redund_tol"],
                           row_cap=ctx.obj["row_cap"])
    report = exported_flexibility(fe)
    path = _out_path(ctx, "exported_flexibility.json")
    record = report.to_json_dict()
    record["meta"].update(meta)
    with open(path, "w") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")
    click.echo(f"{'tie pair':<40}{'area (pu^2)':>14}")
    for x, y, area in report.pair_areas:
        click.echo(f"{x + ' / ' + y:<40}{area:>14.4f}")
    click.echo(f"{'total':<40}{report.total:>14.4f}")
    click.echo(f"wrote {path}")


@main.command()
@case_options
@spec_options
@click.option("--atc-ab", default=None, type=float,
              help="Transfer capacity study->neighbor (default: case value).")
@click.option("--atc-ba", default=None, type=float,
              help="Transfer capacity neighbor->study (default: case value).")
@click.pass_context
@_guard
def atc(ctx, case_path, scale, reserve_mode, reserve_fraction, reserve_units,
        approach, security, gen_outages, line_outages, strict_line_outages,
        atc_ab, atc_ba):
    """Compare the active tie polytope against the transfer-capacity set."""
    case, reserves, config = _load(ctx, case_path, scale, reserve_mode,
                                   reserve_fraction, reserve_units)
    spec = _spec(reserves, approach, security, gen_outages, line_outages,
                 strict_line_outages)
    ab = case.atc_a_to_b_pu if atc_ab is None else atc_ab
    ba = case.atc_b_to_a_pu if atc_ba is None else atc_ba
    if ab is None or ba is None:
        raise CaseError("transfer capacities are neither in the case file "
                        "nor given via --atc-ab/--atc-ba")
    config["spec"] = spec.describe()
    config["atc"] = [ab, ba]
    meta = {"config_hash": _config_hash(config),
            "case_hash": config["case_hash"], "tool": f"gridflex {__version__}"}

    from .analysis import external_polytope

    fe = external_polytope(case, spec, tol=ctx.obj["redund_tol"],
                           row_cap=ctx.obj["row_cap"])
    configured, view = prepare(case, spec)
    flows = compute_dc_flows(configured)
    limits = compute_delta_limits(configured, view, flows)
    atc_fe = build_atc_polytope(view, limits, ab, ba)
    comparison = compare_utilization(fe, atc_fe, tol=ctx.obj["contain_tol"])
    path = _out_path(ctx, "atc_comparison.json")
    record = {"meta": meta}
    record.update(comparison.to_json_dict())
    with open(path, "w") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")
    click.echo(f"active within transfer set: {comparison.active_within_atc}")
    click.echo(f"transfer set within active: {comparison.atc_within_active}")
    click.echo(f"total areas (pu^2): active {comparison.total_active:.4f}, "
               f"transfer {comparison.total_atc:.4f}")
    click.echo(f"wrote {path}")


@main.command()
@case_options
@click.option("--reserve-pct", default=0.05, show_default=True,
              help="Neighbor reserve band as a fraction of each setpoint.")
@click.option("--modes", default="passive,active,atc", show_default=True,
              help="Comma-separated subset of passive,active,atc.")
@click.option("--security", default="n", show_default=True,
              type=click.Choice(["n", "n1"]),
              help="Security level of the exporter's communicated sets.")
@click.option("--atc-ab", default=None, type=float)
@click.option("--atc-ba", default=None, type=float)
@click.option("--neighbor-security", is_flag=True, default=False,
              help="Apply the neighbor's own outage bands in the LPs.")
@click.pass_context
@_guard
def maxdev(ctx, case_path, scale, reserve_mode, reserve_fraction,
           reserve_units, reserve_pct, modes, security, atc_ab, atc_ba,
           neighbor_security):
    """Per-bus maximum deviations in the neighbor area."""
    case, reserves, config = _load(ctx, case_path, scale, reserve_mode,
                                   reserve_fraction, reserve_units)
    mode_list = tuple(m.strip() for m in modes.split(",") if m.strip())
    exporter = reserves if reserve_mode != "file" else ReserveConfig(mode="full")
    config.update({"reserve_pct": reserve_pct, "modes": list(mode_list),
                   "security": security, "neighbor_security": neighbor_security})
    meta = {"config_hash": _config_hash(config),
            "case_hash": config["case_hash"], "tool": f"gridflex {__version__}"}
    report = nodal_deviation_report(
        case, reserve_fraction=reserve_pct, modes=mode_list,
        exporter_reserves=exporter, security=security,
        atc_ab=atc_ab, atc_ba=atc_ba,
        include_neighbor_security=neighbor_security,
        tol=ctx.obj["redund_tol"])
    path = _out_path(ctx, "max_deviations.csv")
    report.to_csv(path, meta=meta)
    click.echo(f"{'bus':>6}{'mode':>10}{'max up':>12}{'max dn':>12}")
    for bus, mode, up, dn in report.rows:
        click.echo(f"{bus:>6}{mode:>10}{up:>12.4f}{dn:>12.4f}")
    click.echo(f"wrote {path}")


@main.command()
@case_options
@spec_options
@click.option("--slice-at", default=0.0, show_default=True,
              help="Fixed coordinate value for 2-D cuts of 3-D sets.")
@click.pass_context
@_guard
def plotdata(ctx, case_path, scale, reserve_mode, reserve_fraction,
             reserve_units, approach, security, gen_outages, line_outages,
             strict_line_outages, slice_at):
    """Vertex CSVs for every tie pair projection and fixed-coordinate cut."""
    case, reserves, config = _load(ctx, case_path, scale, reserve_mode,
                                   reserve_fraction, reserve_units)
    spec = _spec(reserves, approach, security, gen_outages, line_outages,
                 strict_line_outages)
    config["spec"] = spec.describe()
    config["slice_at"] = slice_at
    meta = {"config_hash": _config_hash(config),
            "case_hash": config["case_hash"], "tool": f"gridflex {__version__}"}

    from .analysis import external_polytope
    import itertools

    fe = external_polytope(case, spec, tol=ctx.obj["redund_tol"],
                           row_cap=ctx.obj["row_cap"])
    labels = fe.labels
    written = []
    for x, y in itertools.combinations(labels, 2):
        shadow = project(fe.poly, [x, y], tol=ctx.obj["redund_tol"])
        verts = vertices_2d(shadow)
        name = f"proj_{_sanitize(x)}__{_sanitize(y)}.csv"
        path = _out_path(ctx, name)
        write_vertices_csv(path, verts, header=f"{x},{y}",
                           meta={**meta, "kind": "projection"})
        written.append(path)
    if len(labels) >= 3:
        for fixed in labels:
            others = [l for l in labels if l != fixed]
            k = fe.poly.column(fixed)
            a = fe.poly.A
            cut_b = fe.poly.b - a[:, k] * slice_at
            cut_a = np.delete(a, k, axis=1)
            cut = remove_redundant(HPolytope(cut_a, cut_b, tuple(others)))
            shadow = project(cut, others[:2], tol=ctx.obj["redund_tol"]) \
                if len(others) > 2 else cut
            verts = vertices_2d(shadow)
            name = f"cut_{_sanitize(fixed)}.csv"
            path = _out_path(ctx, name)
            write_vertices_csv(path, verts, header=",".join(others[:2]),
                               meta={**meta, "kind": "cut",
                                     "fixed": fixed, "value": slice_at})
            written.append(path)
    for path in written:
        click.echo(f"wrote {path}")


@main.command()
@click.option("--case", "case_path", required=True, type=click.Path())
@click.pass_context
@_guard
def validate(ctx, case_path):
    """Load and validate a case file; report its shape."""
    case = load_case(case_path)
    view = partition(case)
    flows = compute_dc_flows(case)
    limit_of = {ln.id: ln.flow_limit_pu for ln in case.lines}
    worst = max(abs(f) / limit_of[l]
                for l, f in zip(flows.line_ids, flows.p_line_pu))
    click.echo(f"case:        {case.name}")
    click.echo(f"areas:       {case.areas[0]} (study), {case.areas[1]}")
    click.echo(f"buses:       {len(case.buses)}")
    click.echo(f"lines:       {len(case.lines)} ({view.n_e} ties)")
    click.echo(f"generators:  {len(case.generators)}")
    click.echo(f"total load:  {case.total_load():.4f} pu")
    click.echo(f"worst line loading: {100 * worst:.1f}% of rating")
    click.echo("case is valid")


if __name__ == "__main__":
    main()
