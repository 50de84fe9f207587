"""Flexibility sets and the metrics derived from them.

The pipeline is: configure reserves, partition the study area, compute
sensitivities and margins, stack the constraint blocks, then project
onto the tie dimensions.  The projected set ``G p_e <= g`` is the
artifact one operator hands its neighbor: it bounds every feasible
combination of tie import deviations without revealing internal data.

Approaches
----------
active
    Internal sources may be redispatched in reaction to tie deviations;
    the set lives over ``(p_i, p_e)`` and is projected onto ``p_e``.
passive
    Internal sources stay put (``p_i = 0``): the same rows restricted
    to their external columns.  No projection is needed.

Either flavor exists in a base-case (``n``) and a security (``n1``)
version that adds one row band per generator and line outage.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .constraints import (ConstraintBlock, DeltaLimits, assemble_generator_outages,
                          assemble_line_outages, assemble_nominal,
                          compute_delta_limits, stack_n1)
from .errors import (CaseError, GridflexError, InfeasibleSetError,
                     UnboundedSetError)
from .lp import maximize
from .network import (AreaView, NetworkCase, ReserveConfig, configure_reserves,
                      partition)
from .polytope import (DEFAULT_ROW_CAP, REDUNDANCY_TOL, HPolytope, area_2d,
                       bounding_box, contains, project)
from .sensitivity import (compute_dc_flows, compute_ggdf, compute_lodf,
                          compute_ptdf)

_ORIGIN_TOL = 1e-9


@dataclass(frozen=True)
class FlexibilitySpec:
    """What to build: approach, security level, outage sets, reserves."""

    approach: str
    security: str = "n"
    reserves: ReserveConfig = field(default_factory=ReserveConfig)
    gen_outages: tuple[str, ...] | None = None
    line_outages: tuple[str, ...] | None = None
    strict_line_outages: bool = False

    def __post_init__(self):
        if self.approach not in ("active", "passive"):
            raise GridflexError(f"unknown approach '{self.approach}'")
        if self.security not in ("n", "n1"):
            raise GridflexError(f"unknown security level '{self.security}'")

    def describe(self) -> str:
        parts = [self.approach, self.security, self.reserves.describe()]
        if self.gen_outages is not None:
            parts.append("gen_outages=" + ",".join(self.gen_outages))
        if self.line_outages is not None:
            parts.append("line_outages=" + ",".join(self.line_outages))
        if self.strict_line_outages:
            parts.append("strict")
        return "/".join(parts)


def prepare(case: NetworkCase, spec: FlexibilitySpec):
    """Apply the reserve configuration and partition the study area."""
    configured = configure_reserves(case, spec.reserves)
    return configured, partition(configured)


def assemble_constraints(case: NetworkCase,
                         spec: FlexibilitySpec) -> tuple[ConstraintBlock, AreaView]:
    """Stacked constraint block of the requested flexibility set."""
    configured, view = prepare(case, spec)
    flows = compute_dc_flows(configured)
    limits = compute_delta_limits(configured, view, flows)
    ptdf = compute_ptdf(view)
    block = assemble_nominal(view, ptdf, limits)
    if spec.security == "n1":
        area_units = tuple(sorted(view.area_generators(),
                                  key=lambda g: (g.bus, g.id)))
        if spec.gen_outages is None:
            units = tuple(g for g in area_units if g.p_sched_pu > 0.0)
        else:
            by_id = {g.id: g for g in area_units}
            missing = [u for u in spec.gen_outages if u not in by_id]
            if missing:
                raise GridflexError(
                    f"outage units not in area {view.area}: {', '.join(missing)}")
            units = tuple(by_id[u] for u in spec.gen_outages)
        if units:
            ggdf = compute_ggdf(view, ptdf, units=units)
            gen_block = assemble_generator_outages(view, ptdf, ggdf, limits)
        else:
            gen_block = ConstraintBlock.empty(view.n_i, view.n_e)

        lodf = compute_lodf(view)
        if spec.line_outages is None:
            outages = lodf.outage_ids
        else:
            outages = spec.line_outages
        line_block = assemble_line_outages(
            view, ptdf, lodf, limits, flows, outages=outages,
            strict=spec.strict_line_outages)
        block = stack_n1(block, gen_block, line_block)

    bad = block.b < -_ORIGIN_TOL
    if np.any(bad):
        raise InfeasibleSetError(
            "the scheduled operating point violates security rows",
            rows=tuple(l for l, v in zip(block.labels, bad) if v))
    return block, view


def polytope_from_block(block: ConstraintBlock, view: AreaView,
                        approach: str) -> HPolytope:
    """Turn a stacked constraint block into the requested polytope.

    Active sets span ``(p_i, p_e)``; passive sets keep the same rows
    and offsets but drop the internal columns (the internal sources are
    pinned to their schedule, not merely bounded at zero).
    """
    if approach == "active":
        return HPolytope(np.hstack([block.c_i, block.c_e]), block.b,
                         view.labels)
    return HPolytope(block.c_e, block.b, view.external_labels)


def build_flexibility_set(case: NetworkCase, spec: FlexibilitySpec) -> HPolytope:
    """Flexibility set as an H-polytope over ``(p_i, p_e)`` or ``p_e``."""
    block, view = assemble_constraints(case, spec)
    return polytope_from_block(block, view, spec.approach)


@dataclass(frozen=True)
class ExternalPolytope:
    """Projected tie-deviation set ``G p_e <= g`` plus provenance."""

    poly: HPolytope
    provenance: dict

    @property
    def labels(self) -> tuple[str, ...]:
        return self.poly.labels

    def to_json_dict(self) -> dict:
        record = {"meta": dict(self.provenance)}
        record.update(self.poly.to_json_dict())
        return record

    def dump_json(self, path: str, meta: dict | None = None) -> None:
        record = self.to_json_dict()
        if meta:
            record["meta"].update(meta)
        with open(path, "w") as fh:
            json.dump(record, fh, indent=1, sort_keys=True)
            fh.write("\n")


def export_polytope(flex_set: HPolytope, view: AreaView,
                    spec: FlexibilitySpec | None = None,
                    tol: float = REDUNDANCY_TOL,
                    row_cap: int = DEFAULT_ROW_CAP) -> ExternalPolytope:
    """Project a flexibility set onto the tie dimensions.

    Passive sets are already external and only get minimized.  The
    result is checked to contain the origin and to be bounded, which
    every well-formed flexibility set is (tie capacities bound it).
    """
    keep = view.external_labels
    projected = project(flex_set, keep, tol=tol, row_cap=row_cap)
    if np.any(projected.b < -_ORIGIN_TOL):
        raise InfeasibleSetError("projected set does not contain the origin")
    lo, hi = bounding_box(projected)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise UnboundedSetError("projected tie-deviation set is unbounded")
    provenance = {"case_hash": view.case.case_hash()}
    if spec is not None:
        provenance["spec"] = spec.describe()
    return ExternalPolytope(poly=projected, provenance=provenance)


def external_polytope(case: NetworkCase, spec: FlexibilitySpec,
                      tol: float = REDUNDANCY_TOL,
                      row_cap: int = DEFAULT_ROW_CAP) -> ExternalPolytope:
    """Build and project in one call."""
    flex_set = build_flexibility_set(case, spec)
    _, view = prepare(case, spec)
    return export_polytope(flex_set, view, spec, tol=tol, row_cap=row_cap)


@dataclass(frozen=True)
class ExportedFlexibilityReport:
    """Areas of all two-tie projections; their sum is the headline metric."""

    pair_areas: tuple[tuple[str, str, float], ...]
    total: float
    provenance: dict

    def to_json_dict(self) -> dict:
        return {
            "meta": dict(self.provenance),
            "pairs": [
                {"x": x, "y": y, "area_pu2": a} for x, y, a in self.pair_areas
            ],
            "total_pu2": self.total,
        }


def exported_flexibility(fe: ExternalPolytope) -> ExportedFlexibilityReport:
    """Sum of the areas of every projection onto a pair of tie axes.

    With a single tie there are no pairs; the metric degrades to the
    length of the feasible import interval (in pu rather than pu^2).
    """
    labels = fe.labels
    if len(labels) < 1:
        raise GridflexError("external polytope has no tie dimensions")
    if len(labels) == 1:
        lo, hi = bounding_box(fe.poly)
        return ExportedFlexibilityReport(
            pair_areas=(), total=float(hi[0] - lo[0]),
            provenance=dict(fe.provenance))
    pairs = []
    total = 0.0
    for x, y in itertools.combinations(labels, 2):
        shadow = project(fe.poly, [x, y])
        area = area_2d(shadow)
        pairs.append((x, y, area))
        total += area
    return ExportedFlexibilityReport(
        pair_areas=tuple(pairs), total=float(total),
        provenance=dict(fe.provenance))


def build_atc_polytope(view: AreaView, limits: DeltaLimits,
                       atc_ab: float, atc_ba: float) -> ExternalPolytope:
    """Transfer-capacity polytope over the tie deviations.

    The net deviation is held inside ``[-atc_ba, atc_ab]`` while each
    tie stays inside its remaining capacity.  Spatial information plays
    no role here, which is exactly what makes the comparison with the
    projected sets interesting.
    """
    if atc_ab < 0 or atc_ba < 0:
        raise GridflexError("transfer capacities must be nonnegative")
    n_e = len(limits.tie_ids)
    labels = tuple(f"tie:{t}" for t in limits.tie_ids)
    ones = np.ones((1, n_e))
    a = np.vstack([ones, -ones, np.eye(n_e), -np.eye(n_e)])
    b = np.concatenate([[atc_ab, atc_ba], limits.ext_up, -limits.ext_dn])
    return ExternalPolytope(
        poly=HPolytope(a, b, labels),
        provenance={
            "case_hash": view.case.case_hash(),
            "spec": f"atc/ab={atc_ab:g}/ba={atc_ba:g}",
        })


@dataclass(frozen=True)
class UtilizationComparison:
    """Mutual containment of the active set and the transfer-capacity set."""

    active_within_atc: bool
    atc_within_active: bool
    witness_active_only: np.ndarray | None
    witness_atc_only: np.ndarray | None
    max_violation_active_only: float
    max_violation_atc_only: float
    pair_areas_active: tuple[tuple[str, str, float], ...]
    pair_areas_atc: tuple[tuple[str, str, float], ...]
    total_active: float
    total_atc: float

    def to_json_dict(self) -> dict:
        def point(p):
            return None if p is None else [float(v) for v in p]

        return {
            "active_within_atc": bool(self.active_within_atc),
            "atc_within_active": bool(self.atc_within_active),
            "witness_active_only": point(self.witness_active_only),
            "witness_atc_only": point(self.witness_atc_only),
            "max_violation_active_only": self.max_violation_active_only,
            "max_violation_atc_only": self.max_violation_atc_only,
            "pair_areas_active": [
                {"x": x, "y": y, "area_pu2": a} for x, y, a in self.pair_areas_active],
            "pair_areas_atc": [
                {"x": x, "y": y, "area_pu2": a} for x, y, a in self.pair_areas_atc],
            "total_active_pu2": self.total_active,
            "total_atc_pu2": self.total_atc,
        }


def compare_utilization(active_fe: ExternalPolytope, atc_fe: ExternalPolytope,
                        tol: float = 1e-6) -> UtilizationComparison:
    """Compare tie usage allowed by the active set against the ATC box.

    A witness in one difference set is a tie deviation combination that
    one rulebook admits and the other forbids.
    """
    if active_fe.labels != atc_fe.labels:
        raise GridflexError("polytopes compare only over identical tie labels")
    in_atc = contains(atc_fe.poly, active_fe.poly, tol)
    in_active = contains(active_fe.poly, atc_fe.poly, tol)
    rep_active = exported_flexibility(active_fe)
    rep_atc = exported_flexibility(atc_fe)
    return UtilizationComparison(
        active_within_atc=in_atc.contained,
        atc_within_active=in_active.contained,
        witness_active_only=None if in_atc.contained else in_atc.witness,
        witness_atc_only=None if in_active.contained else in_active.witness,
        max_violation_active_only=in_atc.max_violation,
        max_violation_atc_only=in_active.max_violation,
        pair_areas_active=rep_active.pair_areas,
        pair_areas_atc=rep_atc.pair_areas,
        total_active=rep_active.total,
        total_atc=rep_atc.total,
    )


class _NeighborModel:
    """Shared LP pieces for per-bus deviation studies in the neighbor area.

    Variables are ordered ``[delta, p_B..., p_e..., p_A...]`` where
    ``delta`` is the probed bus disturbance, ``p_B`` the neighbor's own
    reserve deviations (one per source bus), ``p_e`` the tie imports in
    the exporter's convention, and ``p_A`` (transfer-capacity mode
    only) the exporter's aggregate unit deviations.
    """

    def __init__(self, case: NetworkCase, neighbor_reserves: ReserveConfig,
                 include_security: bool = False):
        self.case = case
        configured = configure_reserves(case, neighbor_reserves)
        self.view = partition(configured, area=case.neighbor_area)
        self.flows = compute_dc_flows(configured)
        self.ptdf = compute_ptdf(self.view)
        self.limits = compute_delta_limits(configured, self.view, self.flows)
        self.n_b = self.view.n_i
        self.n_e = self.view.n_e
        n_int = len(self.view.internal_lines)
        self.h_int_i = self.ptdf.h_i[:n_int]
        self.h_int_e = self.ptdf.h_e[:n_int]
        self.up = self.limits.line_up[:n_int]
        self.dn = self.limits.line_dn[:n_int]
        self.gen_outage_blocks = []
        self.line_outage_blocks = []
        if include_security:
            self._build_security_blocks(n_int)

    def _build_security_blocks(self, n_int: int):
        """Neighbor-side outage bands; delta columns are bound per probed bus."""
        view, ptdf, limits = self.view, self.ptdf, self.limits
        ggdf = compute_ggdf(view, ptdf)
        lodf = compute_lodf(view)
        for j in range(len(ggdf.unit_ids)):
            g_col = ggdf.matrix[:n_int, j]
            shift = g_col * ggdf.p_gen_pu[j]
            q_b = self.h_int_i.copy()
            bus = ggdf.unit_buses[j]
            if bus in view.source_buses:
                q_b[:, view.source_buses.index(bus)] += g_col
            self.gen_outage_blocks.append(
                (q_b, limits.line_up[:n_int] - shift,
                 limits.line_dn[:n_int] + shift))
        internal_ids = {ln.id for ln in view.internal_lines}
        for oid in lodf.outage_ids:
            if oid not in internal_ids:
                continue
            mask, l_col = lodf.column(oid)
            mask, l_int = mask[:n_int], l_col[:n_int]
            k = view.line_ids.index(oid)
            shift = (l_int * self.flows.flow(oid))[mask]
            self.line_outage_blocks.append(
                (k, l_int[mask],
                 limits.line_up[:n_int][mask] - shift,
                 limits.line_dn[:n_int][mask] + shift))

    def solve(self, bus: int, mode: str, imported: ExternalPolytope):
        view = self.view
        if not any(b.id == bus for b in view.buses):
            raise CaseError(f"bus {bus} is not in area {view.area}", bus)
        if tuple(imported.labels) != view.external_labels:
            raise GridflexError("imported polytope labels do not match the ties")
        n_b, n_e = self.n_b, self.n_e
        n_a = 0
        exporter_units = ()
        if mode == "atc":
            exporter_units = tuple(sorted(
                self.case.area_generators(self.case.study_area),
                key=lambda g: (g.bus, g.id)))
            n_a = len(exporter_units)
        n_var = 1 + n_b + n_e + n_a
        delta_col = self.ptdf.bus_column(bus)[: len(self.view.internal_lines)]

        band = np.hstack([
            delta_col[:, None], self.h_int_i, -self.h_int_e,
            np.zeros((len(delta_col), n_a)),
        ])
        a_rows = [band, -band]
        b_rows = [self.up, -self.dn]
        for q_b, off_up, off_dn in self.gen_outage_blocks:
            block = np.hstack([
                delta_col[:, None], q_b, -self.h_int_e,
                np.zeros((q_b.shape[0], n_a))])
            a_rows.extend([block, -block])
            b_rows.extend([off_up, -off_dn])
        for k, l_masked, off_up, off_dn in self.line_outage_blocks:
            full_row = np.concatenate([
                [delta_col[k]], self.ptdf.h_i[k], -self.ptdf.h_e[k],
                np.zeros(n_a)])
            block = np.outer(l_masked, full_row)
            a_rows.extend([block, -block])
            b_rows.extend([off_up, -off_dn])
        imp = np.hstack([
            np.zeros((imported.poly.nrows, 1 + n_b)), imported.poly.A,
            np.zeros((imported.poly.nrows, n_a))])
        a_rows.append(imp)
        b_rows.append(imported.poly.b)
        a_ub = np.vstack(a_rows)
        b_ub = np.concatenate(b_rows)

        balance = np.zeros((1, n_var))
        balance[0, 0] = 1.0
        balance[0, 1:1 + n_b] = 1.0
        balance[0, 1 + n_b:1 + n_b + n_e] = -1.0
        a_eq = [balance]
        b_eq = [0.0]
        if mode == "atc":
            coupling = np.zeros((1, n_var))
            coupling[0, 1 + n_b:1 + n_b + n_e] = 1.0
            coupling[0, 1 + n_b + n_e:] = 1.0
            a_eq.append(coupling)
            b_eq.append(0.0)
        a_eq = np.vstack(a_eq)
        b_eq = np.array(b_eq)

        bounds = [(None, None)]
        for j in range(n_b):
            bounds.append((float(self.limits.bus_dn[j]), float(self.limits.bus_up[j])))
        bounds.extend([(None, None)] * n_e)
        for g in exporter_units:
            bounds.append((g.p_min_pu - g.p_sched_pu, g.p_max_pu - g.p_sched_pu))

        results = []
        for sign in (1.0, -1.0):
            c = np.zeros(n_var)
            c[0] = sign
            res = maximize(c, a_ub, b_ub, a_eq=a_eq, b_eq=b_eq, bounds=bounds)
            if res.status == "infeasible":
                raise InfeasibleSetError(
                    f"deviation study infeasible at bus {bus} (mode {mode})")
            if res.status == "unbounded":
                raise UnboundedSetError(
                    f"deviation study unbounded at bus {bus} (mode {mode}); "
                    "a bound is missing")
            results.append(sign * res.value)
        up, dn = results
        return float(up), float(dn)


def max_nodal_deviation(case: NetworkCase, bus: int, mode: str, *,
                        imported: ExternalPolytope,
                        reserve_fraction: float | None = None,
                        neighbor_reserves: ReserveConfig | None = None,
                        include_neighbor_security: bool = False):
    """Largest positive and negative disturbance a neighbor bus can take.

    The disturbance ``delta`` at ``bus`` is balanced by the neighbor's
    own reserves and by tie deviations restricted to ``imported`` (the
    exporter's communicated set for modes ``passive``/``active``, or
    the transfer-capacity polytope for mode ``atc``, where the exporter
    side is a bare aggregate of unit bands with no network model).
    Returns ``(max_up, max_dn)`` with ``max_up >= 0 >= max_dn``.
    """
    if mode not in ("passive", "active", "atc"):
        raise GridflexError(f"unknown deviation mode '{mode}'")
    if neighbor_reserves is None:
        if reserve_fraction is None:
            raise GridflexError(
                "either reserve_fraction or neighbor_reserves is required")
        neighbor_reserves = ReserveConfig(mode="fraction", fraction=reserve_fraction)
    model = _NeighborModel(case, neighbor_reserves,
                           include_security=include_neighbor_security)
    return model.solve(bus, mode, imported)


@dataclass(frozen=True)
class NodalDeviationReport:
    """Per-bus deviation bounds for one reserve setting, several modes."""

    reserve_fraction: float
    rows: tuple[tuple[int, str, float, float], ...]
    provenance: dict

    def to_csv(self, path: str, meta: dict | None = None) -> None:
        with open(path, "w") as fh:
            merged = dict(self.provenance)
            if meta:
                merged.update(meta)
            for key in sorted(merged):
                fh.write(f"# {key}={merged[key]}\n")
            fh.write("bus,mode,max_up_pu,max_dn_pu\n")
            for bus, mode, up, dn in self.rows:
                fh.write(f"{bus},{mode},{up!r},{dn!r}\n")

    def bounds(self, bus: int, mode: str) -> tuple[float, float]:
        for b, m, up, dn in self.rows:
            if b == bus and m == mode:
                return up, dn
        raise KeyError((bus, mode))


def nodal_deviation_report(case: NetworkCase, *, reserve_fraction: float,
                           modes=("passive", "active", "atc"),
                           exporter_reserves: ReserveConfig | None = None,
                           security: str = "n",
                           atc_ab: float | None = None,
                           atc_ba: float | None = None,
                           include_neighbor_security: bool = False,
                           tol: float = REDUNDANCY_TOL) -> NodalDeviationReport:
    """Deviation bounds for every neighbor bus under the chosen modes.

    The exporter's communicated sets are built once: the passive and
    active sets at the requested security level (exporter reserves
    default to full redispatch), and the transfer-capacity polytope
    from the case ATC values unless overridden.
    """
    if exporter_reserves is None:
        exporter_reserves = ReserveConfig(mode="full")
    imported: dict[str, ExternalPolytope] = {}
    if "passive" in modes:
        imported["passive"] = external_polytope(
            case, FlexibilitySpec("passive", security, exporter_reserves), tol=tol)
    if "active" in modes:
        imported["active"] = external_polytope(
            case, FlexibilitySpec("active", security, exporter_reserves), tol=tol)
    if "atc" in modes:
        ab = case.atc_a_to_b_pu if atc_ab is None else atc_ab
        ba = case.atc_b_to_a_pu if atc_ba is None else atc_ba
        if ab is None or ba is None:
            raise GridflexError("transfer capacities are neither in the case "
                                "nor given explicitly")
        configured, view = prepare(case, FlexibilitySpec("active", "n",
                                                         exporter_reserves))
        flows = compute_dc_flows(configured)
        limits = compute_delta_limits(configured, view, flows)
        imported["atc"] = build_atc_polytope(view, limits, ab, ba)

    model = _NeighborModel(
        case, ReserveConfig(mode="fraction", fraction=reserve_fraction),
        include_security=include_neighbor_security)
    rows = []
    for b in sorted(bus.id for bus in model.view.buses):
        for mode in modes:
            up, dn = model.solve(b, mode, imported[mode])
            rows.append((b, mode, up, dn))
    return NodalDeviationReport(
        reserve_fraction=reserve_fraction,
        rows=tuple(rows),
        provenance={
            "case_hash": case.case_hash(),
            "reserve_fraction": f"{reserve_fraction:g}",
            "security": security,
        })
