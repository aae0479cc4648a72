"""Flow subdivision and flow/link updating.

A split replaces one flow by n flows whose functions must sum to the
original (checked numerically before anything is built); the remaining
n - 1 degrees of freedom are the caller's. Splitting a flow joining two
stocks applies the same part functions in both corollas, then reglues the
whole diagram, so the result's collapse map back onto the original flow is
a valid morphism by construction.

An update replaces a flow's link set by a subset and its function by a new
one over the retained links; it is performed by swapping the corresponding
single-flow part in every corolla copy and the unit flow, then regluing.

Generated ids: part flows keep the caller's ids, their incidence elements
reuse the flow id, a part's copy of link ``l`` is ``l@<part>``, and a
CTLink ``k`` copies to ``k@<part>``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .colimit import ElDiagram, colimit_el
from .decomposition import Corolla, CorollaFlow, _elements, single_flow_parts
from .diagram import (
    DEFAULT_EQ,
    DiagramMorphism,
    EqCheckConfig,
    StockFlowDiagram,
    check_flow_condition,
    check_naturality,
    disc,
    exprs_numerically_equal,
    make_diagram,
)
from .errors import (
    DiagramError,
    DuplicateFlowId,
    ForeignLink,
    SumMismatch,
    UnknownFlow,
    UnknownStock,
)
from .expr import FlowExpr, as_expr, free_links, precompose, sum_exprs
from .schema import PrimitiveDiagram

__all__ = [
    "SplitPart",
    "SplitSpec",
    "FlowUpdate",
    "CorollaSplit",
    "split_flow_in_corolla",
    "split_flow",
    "update_flow",
    "add_flow",
]


@dataclass(frozen=True)
class SplitPart:
    flow: str
    fn: FlowExpr

    def __post_init__(self) -> None:
        object.__setattr__(self, "fn", as_expr(self.fn))


@dataclass(frozen=True)
class SplitSpec:
    """Split ``flow`` into the given parts; part functions are written over
    the links of the flow being split and must sum to its function."""

    flow: str
    parts: tuple[SplitPart, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise DiagramError("a split needs at least one part")

    @staticmethod
    def of(flow: str, parts) -> "SplitSpec":
        return SplitSpec(flow, tuple(SplitPart(i, f) for i, f in parts))


@dataclass(frozen=True)
class FlowUpdate:
    """Retain only ``links`` of ``flow`` and replace its function by ``fn``
    (written over the retained links). ``stock`` names the corolla the
    update is anchored at and must be incident to the flow."""

    stock: str
    flow: str
    links: tuple[str, ...]
    fn: FlowExpr

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "fn", as_expr(self.fn))


@dataclass
class CorollaSplit:
    corolla: Corolla
    collapse: DiagramMorphism  # certified map onto the original corolla


def _validate_split(
    spec: SplitSpec,
    original_fn: FlowExpr,
    link_ids: tuple[str, ...],
    taken_flow_ids: set[str],
    cfg: EqCheckConfig,
) -> None:
    seen: set[str] = set()
    for part in spec.parts:
        if part.flow in seen or part.flow in taken_flow_ids:
            raise DuplicateFlowId(part.flow)
        seen.add(part.flow)
        for v in sorted(free_links(part.fn)):
            if v not in link_ids:
                raise ForeignLink(part.flow, v)
    total = sum_exprs([p.fn for p in spec.parts])
    equal, dev = exprs_numerically_equal(original_fn, total, link_ids, cfg)
    if not equal:
        raise SumMismatch(spec.flow, dev)


def _resolve_copy(c: Corolla, flow: str) -> str:
    """Accept either a corolla flow id or an ambient flow id with a unique
    copy in this corolla."""
    if flow in c.flows:
        return flow
    matches = [cid for cid, info in c.flows.items() if info.ambient_flow == flow]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise UnknownFlow(flow, f"not a flow of the corolla of {c.stock!r}")
    raise DiagramError(
        f"flow {flow!r} has several copies in the corolla of {c.stock!r}; name one of: "
        + ", ".join(matches)
    )


@dataclass
class _PartBuild:
    diagram: StockFlowDiagram
    info: CorollaFlow
    link_rename: dict[str, str]  # original corolla link -> part link
    ct_rename: dict[str, str]    # original ctlink -> part ctlink


def _part_for_split(
    template: StockFlowDiagram, stock: str, side: str, copy_links: tuple[str, ...], part: SplitPart
) -> _PartBuild:
    prim = template.prim
    link_rename = {l: f"{l}@{part.flow}" for l in copy_links}
    ct_rename = {k: f"{k}@{part.flow}" for k in prim.ctlinks}
    incid = (
        dict(inflows=(part.flow,), down={part.flow: stock}, in_={part.flow: part.flow},
             outflows=(), up={}, out={})
        if side == "in"
        else dict(outflows=(part.flow,), up={part.flow: stock}, out={part.flow: part.flow},
                  inflows=(), down={}, in_={})
    )
    d = StockFlowDiagram(
        PrimitiveDiagram(
            stocks=(stock,),
            flows=(part.flow,),
            links=tuple(link_rename[l] for l in copy_links),
            ctlinks=tuple(ct_rename[k] for k in prim.ctlinks),
            st={ct_rename[k]: stock for k in prim.ctlinks},
            ct={ct_rename[k]: link_rename[prim.ct[k]] for k in prim.ctlinks},
            fl={link_rename[l]: part.flow for l in copy_links},
            **incid,
        ),
        {part.flow: precompose(part.fn, link_rename)},
    )
    # the part's unit flow will carry the renamed link ids, so the arrow's
    # link component is the identity on them
    info = CorollaFlow(part.flow, side, part.flow, {v: v for v in link_rename.values()})
    return _PartBuild(d, info, link_rename, ct_rename)


def _reglue(
    c: Corolla,
    replaced_copy: str,
    replacements: list[tuple[StockFlowDiagram, CorollaFlow]],
    cfg: EqCheckConfig,
) -> Corolla:
    """Swap one single-flow part for others and recompute the corolla."""
    parts, _ = single_flow_parts(c)
    el = ElDiagram()
    apex = disc([c.stock])
    el.add_object("S", apex)
    new_flows: dict[str, CorollaFlow] = {}

    def attach(key: str, d: StockFlowDiagram) -> None:
        el.add_object(key, d)
        el.add_arrow(f"g:{key}", "S", key, DiagramMorphism(apex, d, stock_map={c.stock: c.stock}))

    for part in parts:
        if part.flow == replaced_copy:
            for d, info in replacements:
                attach(f"P:{info.incidence}#{info.side}", d)
                new_flows[d.flows[0]] = info
        else:
            attach(f"P:{part.flow}", part.diagram)
            new_flows[part.flow] = c.flows[part.flow]
    result, _ = colimit_el(el, cfg)
    return Corolla(result, c.stock, new_flows)


def split_flow_in_corolla(
    c: Corolla,
    spec: SplitSpec,
    cfg: EqCheckConfig = DEFAULT_EQ,
    taken_flow_ids: set[str] | None = None,
) -> CorollaSplit:
    """Split one corolla flow; the returned collapse morphism maps every
    part back onto the original flow and is certified, which is exactly the
    sum constraint."""
    copy_id = _resolve_copy(c, spec.flow)
    info = c.flows[copy_id]
    copy_links = c.diagram.prim.fl_preimage(copy_id)
    taken = set(c.diagram.flows) | {i.ambient_flow for i in c.flows.values()}
    taken |= taken_flow_ids or set()
    _validate_split(spec, c.diagram.fn(copy_id), copy_links, taken, cfg)

    parts, _ = single_flow_parts(c)
    template = next(p.diagram for p in parts if p.flow == copy_id)
    builds = [_part_for_split(template, c.stock, info.side, copy_links, part) for part in spec.parts]
    new_c = _reglue(c, copy_id, [(b.diagram, b.info) for b in builds], cfg)

    link_back: dict[str, str] = {}
    ct_back: dict[str, str] = {}
    for b in builds:
        link_back.update({renamed: orig for orig, renamed in b.link_rename.items()})
        ct_back.update({renamed: orig for orig, renamed in b.ct_rename.items()})

    collapse = DiagramMorphism(new_c.diagram, c.diagram)
    collapse.stock_map[c.stock] = c.stock
    for cid in new_c.diagram.flows:
        collapse.flow_map[cid] = cid if cid in c.flows else copy_id
    for i in new_c.diagram.prim.inflows:
        collapse.inflow_map[i] = i if i in c.diagram.prim.inflows else info.incidence
    for o in new_c.diagram.prim.outflows:
        collapse.outflow_map[o] = o if o in c.diagram.prim.outflows else info.incidence
    for l in new_c.diagram.prim.links:
        collapse.link_map[l] = link_back.get(l, l)
    for k in new_c.diagram.prim.ctlinks:
        collapse.ctlink_map[k] = ct_back.get(k, k)

    report = check_naturality(collapse)
    if not report.ok:
        raise DiagramError("internal: collapse map is not natural:\n" + report.describe())
    flow_report = check_flow_condition(collapse, cfg)
    if not flow_report.ok:
        raise SumMismatch(spec.flow, 0.0)
    return CorollaSplit(new_c, collapse)


def _assemble_el(
    unit_order: list[str],
    units: dict[str, StockFlowDiagram],
    corollas: dict[str, Corolla],
    stock_order: tuple[str, ...],
) -> ElDiagram:
    """The decomposition diagram with the given unit flows and corollas,
    one arrow per corolla flow copy, wired by provenance."""
    el = ElDiagram()
    for f in unit_order:
        el.add_object(f"U:{f}", units[f])
    for s in stock_order:
        el.add_object(f"C:{s}", corollas[s].diagram)
    for s in stock_order:
        for copy_id, info in corollas[s].flows.items():
            m = DiagramMorphism(
                units[info.ambient_flow],
                corollas[s].diagram,
                flow_map={info.ambient_flow: copy_id},
                link_map=dict(info.link_map),
            )
            el.add_arrow(f"F:{info.side}:{info.incidence}@{s}", f"U:{info.ambient_flow}", f"C:{s}", m)
    return el


def _unit_diagram(flow: str, links: tuple[str, ...], fn: FlowExpr) -> StockFlowDiagram:
    return StockFlowDiagram(
        PrimitiveDiagram(flows=(flow,), links=links, fl={l: flow for l in links}),
        {flow: fn},
    )


def split_flow(x: StockFlowDiagram, spec: SplitSpec, cfg: EqCheckConfig = DEFAULT_EQ) -> StockFlowDiagram:
    """Split a flow across the whole diagram.

    The split is applied in the corolla of each incident stock (with equal
    part functions, so the two sides stay consistent) and fresh unit flows
    are created for the parts; regluing yields the subdivided diagram.
    """
    f = spec.flow
    prim = x.prim
    if f not in prim.flows:
        raise UnknownFlow(f)
    links = prim.fl_preimage(f)
    _validate_split(spec, x.fn(f), links, set(prim.flows), cfg)

    fi = prim.inflow_of_flow(f)
    fo = prim.outflow_of_flow(f)
    endpoints = [prim.down[fi] if fi is not None else None, prim.up[fo] if fo is not None else None]
    if endpoints[0] is not None and endpoints[0] == endpoints[1]:
        raise DiagramError(f"flow {f!r} is a self-flow; splitting it is not supported")

    _, corollas, units = _elements(x)
    unit_diagrams = {g: units[g].diagram for g in prim.flows if g != f}
    unit_order: list[str] = []
    for g in prim.flows:
        if g != f:
            unit_order.append(g)
            continue
        for part in spec.parts:
            rename = {l: f"{l}@{part.flow}" for l in links}
            unit_diagrams[part.flow] = _unit_diagram(
                part.flow,
                tuple(rename[l] for l in links),
                precompose(part.fn, rename),
            )
            unit_order.append(part.flow)

    for s in (e for e in endpoints if e is not None):
        corollas[s] = split_flow_in_corolla(corollas[s], spec, cfg, set(prim.flows)).corolla

    el = _assemble_el(unit_order, unit_diagrams, corollas, prim.stocks)
    result, _ = colimit_el(el, cfg)
    return result


def update_flow(x: StockFlowDiagram, u: FlowUpdate, cfg: EqCheckConfig = DEFAULT_EQ) -> StockFlowDiagram:
    """Restrict a flow's links to a subset and replace its function,
    regluing the diagram with the updated single-flow parts."""
    prim = x.prim
    if u.flow not in prim.flows:
        raise UnknownFlow(u.flow)
    if u.stock not in prim.stocks:
        raise UnknownStock(u.stock)
    incident_stocks = set()
    fi, fo = prim.inflow_of_flow(u.flow), prim.outflow_of_flow(u.flow)
    if fi is not None:
        incident_stocks.add(prim.down[fi])
    if fo is not None:
        incident_stocks.add(prim.up[fo])
    if u.stock not in incident_stocks:
        raise UnknownStock(u.stock, f"not incident to flow {u.flow!r}")
    all_links = prim.fl_preimage(u.flow)
    retained = tuple(l for l in all_links if l in set(u.links))
    for l in u.links:
        if l not in all_links:
            raise ForeignLink(u.flow, l)
    for v in sorted(free_links(u.fn)):
        if v not in retained:
            raise ForeignLink(u.flow, v)

    _, corollas, units = _elements(x)
    unit_diagrams = {g: units[g].diagram for g in prim.flows}
    unit_diagrams[u.flow] = _unit_diagram(u.flow, retained, u.fn)

    for s in incident_stocks:
        c = corollas[s]
        copy_id = _resolve_copy(c, u.flow)
        info = c.flows[copy_id]
        parts, _ = single_flow_parts(c)
        template = next(p.diagram for p in parts if p.flow == copy_id)
        tprim = template.prim
        kept_links = tuple(info.link_map[l] for l in all_links if l in set(retained))
        kept_set = set(kept_links)
        kept_ct = tuple(k for k in tprim.ctlinks if tprim.ct[k] in kept_set)
        restricted_map = {l: info.link_map[l] for l in retained}
        incid = (
            dict(inflows=tprim.inflows, down=tprim.down, in_=tprim.in_, outflows=(), up={}, out={})
            if info.side == "in"
            else dict(outflows=tprim.outflows, up=tprim.up, out=tprim.out, inflows=(), down={}, in_={})
        )
        new_part = StockFlowDiagram(
            PrimitiveDiagram(
                stocks=(s,),
                flows=(copy_id,),
                links=kept_links,
                ctlinks=kept_ct,
                st={k: s for k in kept_ct},
                ct={k: tprim.ct[k] for k in kept_ct},
                fl={l: copy_id for l in kept_links},
                **incid,
            ),
            {copy_id: precompose(u.fn, restricted_map)},
        )
        new_info = CorollaFlow(info.incidence, info.side, info.ambient_flow, restricted_map)
        corollas[s] = _reglue(c, copy_id, [(new_part, new_info)], cfg)

    el = _assemble_el(list(prim.flows), unit_diagrams, corollas, prim.stocks)
    result, _ = colimit_el(el, cfg)
    return result


def add_flow(
    x: StockFlowDiagram,
    stock: str,
    side: str,
    flow: str,
    links: list[tuple[str, str | None]],
    fn: FlowExpr | str,
) -> StockFlowDiagram:
    """Adjoin a fresh half flow at ``stock``; each link row is
    (link id, source stock or None). The result is the diagram with the new
    single-flow summand, all existing structure untouched."""
    prim = x.prim
    if stock not in prim.stocks:
        raise UnknownStock(stock)
    if side not in ("in", "out"):
        raise ValueError("side must be 'in' or 'out'")
    if flow in prim.flows:
        raise DuplicateFlowId(flow)
    fn = as_expr(fn)
    link_ids = [l for l, _ in links]
    existing = set(prim.links)
    for l, src in links:
        if l in existing or link_ids.count(l) > 1:
            raise DiagramError(f"link id {l!r} already exists")
        if src is not None and src not in prim.stocks:
            raise UnknownStock(src, f"declared source of link {l!r}")
    declared = set(link_ids)
    for v in sorted(free_links(fn)):
        if v not in declared:
            raise ForeignLink(flow, v)

    new_ct = [(f"ct:{l}", src, l) for l, src in links if src is not None]
    incid = (
        dict(inflows=prim.inflows + (flow,), down={**prim.down, flow: stock}, in_={**prim.in_, flow: flow},
             outflows=prim.outflows, up=dict(prim.up), out=dict(prim.out))
        if side == "in"
        else dict(outflows=prim.outflows + (flow,), up={**prim.up, flow: stock}, out={**prim.out, flow: flow},
                  inflows=prim.inflows, down=dict(prim.down), in_=dict(prim.in_))
    )
    new_prim = PrimitiveDiagram(
        stocks=prim.stocks,
        flows=prim.flows + (flow,),
        links=prim.links + tuple(link_ids),
        ctlinks=prim.ctlinks + tuple(c for c, _, _ in new_ct),
        st={**prim.st, **{c: s for c, s, _ in new_ct}},
        ct={**prim.ct, **{c: l for c, _, l in new_ct}},
        fl={**prim.fl, **{l: flow for l in link_ids}},
        **incid,
    )
    return make_diagram(new_prim, {**x.flow_fns, flow: fn})
