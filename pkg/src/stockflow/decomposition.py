"""Decomposition of a diagram into corollas and unit flows.

The corolla of a stock is the one-stock diagram carrying every inflow and
outflow incidence of that stock, a copy of each incident flow per
incidence, those flows' links, and the CTLinks sourced at the stock. Links
owned by other stocks appear without a CTLink ("half links"). The unit flow
of a flow is the free-hanging flow with its links and function. Gluing
every unit flow into the corollas of its endpoint stocks recovers the
original diagram; ``recompose`` computes that colimit and the round trip is
checked by tests rather than assumed.

A self-flow of a stock contributes two flow copies to its corolla (one per
incidence), each with its own copy of the links; the stock's CTLinks attach
to the inflow-side copy. Both copies carry the whole original function, so
recomposing a self-flow merges two full copies onto one flow and the glued
function candidates disagree unless the function is zero; the structural
decomposition is still available, but recompose refuses to invent a
function in that case.

Link and incidence ids are deliberately not freshened: a link shared
between a unit flow and two corollas glues back to a single link precisely
because the inclusion arrows identify the copies.
"""

from __future__ import annotations

from dataclasses import dataclass

from .colimit import ElDiagram, colimit_el
from .diagram import (
    DEFAULT_EQ,
    DiagramMorphism,
    EqCheckConfig,
    StockFlowDiagram,
    disc,
)
from .errors import NonLocalLink, UnknownFlow, UnknownStock
from .expr import FlowExpr, precompose
from .schema import PrimitiveDiagram

__all__ = [
    "CorollaFlow",
    "Corolla",
    "UnitFlow",
    "SingleFlowPart",
    "corolla",
    "unit_flow",
    "elements_category",
    "recompose",
    "single_flow_parts",
]


@dataclass(frozen=True)
class CorollaFlow:
    """Provenance of one corolla flow copy."""

    incidence: str              # the ambient Inflow/Outflow element
    side: str                   # "in" | "out"
    ambient_flow: str
    link_map: dict[str, str]    # ambient link id -> corolla link id


@dataclass
class Corolla:
    diagram: StockFlowDiagram
    stock: str
    flows: dict[str, CorollaFlow]  # corolla flow id -> provenance


@dataclass
class UnitFlow:
    diagram: StockFlowDiagram
    flow: str


@dataclass
class SingleFlowPart:
    """One stock, one flow, one incidence: the atoms a corolla splits into."""

    diagram: StockFlowDiagram
    stock: str
    flow: str        # corolla flow id
    side: str
    incidence: str


def corolla(x: StockFlowDiagram, s: str) -> Corolla:
    """Extract the corolla of ``s``, with provenance bookkeeping.

    Raises NonLocalLink if a CTLink at ``s`` targets a link whose flow has
    no incidence at ``s``; such a link cannot live in any corolla and the
    decomposition is undefined for it.
    """
    prim = x.prim
    if s not in prim.stocks:
        raise UnknownStock(s)

    copies: list[tuple[str, CorollaFlow]] = []
    per_flow_count: dict[str, int] = {}
    incidences = [(i, "in", prim.in_[i]) for i in prim.inflow_incidences_at(s)] + [
        (o, "out", prim.out[o]) for o in prim.outflow_incidences_at(s)
    ]
    for _, _, f in incidences:
        per_flow_count[f] = per_flow_count.get(f, 0) + 1
    for incidence, side, f in incidences:
        copy_id = f"{incidence}#{side}"
        link_map = {
            l: (l if per_flow_count[f] == 1 else f"{l}#{side}") for l in prim.fl_preimage(f)
        }
        copies.append((copy_id, CorollaFlow(incidence, side, f, link_map)))

    flow_ids = tuple(cid for cid, _ in copies)
    links: list[str] = []
    fl: dict[str, str] = {}
    fns: dict[str, FlowExpr] = {}
    for cid, info in copies:
        for l_copy in info.link_map.values():
            links.append(l_copy)
            fl[l_copy] = cid
        fns[cid] = precompose(x.fn(info.ambient_flow), info.link_map)

    inflows = tuple(i for i, side, _ in incidences if side == "in")
    outflows = tuple(o for o, side, _ in incidences if side == "out")
    in_ = {i: f"{i}#in" for i in inflows}
    out = {o: f"{o}#out" for o in outflows}

    ctlinks: list[str] = []
    st: dict[str, str] = {}
    ct: dict[str, str] = {}
    copy_of: dict[tuple[str, str], str] = {}
    for cid, info in copies:
        for l_ambient, l_copy in info.link_map.items():
            # the inflow-side copy comes first and receives the CTLink
            copy_of.setdefault(("link", l_ambient), l_copy)
    for c in prim.ctlinks_at(s):
        l = prim.ct[c]
        f = prim.fl[l]
        if per_flow_count.get(f, 0) == 0:
            raise NonLocalLink(c, s, f)
        ctlinks.append(c)
        st[c] = s
        ct[c] = copy_of[("link", l)]

    d = StockFlowDiagram(
        PrimitiveDiagram(
            stocks=(s,),
            flows=flow_ids,
            inflows=inflows,
            outflows=outflows,
            links=tuple(links),
            ctlinks=tuple(ctlinks),
            up={o: s for o in outflows},
            out=out,
            down={i: s for i in inflows},
            in_=in_,
            st=st,
            ct=ct,
            fl=fl,
        ),
        fns,
    )
    return Corolla(d, s, dict(copies))


def unit_flow(x: StockFlowDiagram, f: str) -> UnitFlow:
    prim = x.prim
    if f not in prim.flows:
        raise UnknownFlow(f)
    links = prim.fl_preimage(f)
    d = StockFlowDiagram(
        PrimitiveDiagram(flows=(f,), links=links, fl={l: f for l in links}),
        {f: x.fn(f)},
    )
    return UnitFlow(d, f)


def _elements(x: StockFlowDiagram) -> tuple[ElDiagram, dict[str, Corolla], dict[str, UnitFlow]]:
    units = {f: unit_flow(x, f) for f in x.flows}
    corollas = {s: corolla(x, s) for s in x.stocks}
    el = ElDiagram()
    for f, u in units.items():
        el.add_object(f"U:{f}", u.diagram)
    for s, c in corollas.items():
        el.add_object(f"C:{s}", c.diagram)
    for s, c in corollas.items():
        for copy_id, info in c.flows.items():
            m = DiagramMorphism(
                units[info.ambient_flow].diagram,
                c.diagram,
                flow_map={info.ambient_flow: copy_id},
                link_map=dict(info.link_map),
            )
            el.add_arrow(f"F:{info.side}:{info.incidence}", f"U:{info.ambient_flow}", f"C:{s}", m)
    return el, corollas, units


def elements_category(x: StockFlowDiagram) -> ElDiagram:
    """Unit flows and corollas of ``x`` with one inclusion arrow per
    incidence (a self-flow contributes two arrows into its corolla)."""
    el, _, _ = _elements(x)
    return el


def recompose(d: ElDiagram, cfg: EqCheckConfig = DEFAULT_EQ) -> StockFlowDiagram:
    """Colimit of a decomposition-shaped diagram. On
    ``elements_category(x)`` this returns a diagram isomorphic to ``x``."""
    result, _ = colimit_el(d, cfg)
    return result


def single_flow_parts(c: Corolla) -> tuple[list[SingleFlowPart], ElDiagram]:
    """Split a corolla into one-flow parts glued along the shared stock.

    The gluing diagram has one arrow from the one-stock discrete diagram
    into each part; its colimit is the corolla again (flow functions and
    ids included, since nothing but the stock is shared).
    """
    prim = c.diagram.prim
    parts: list[SingleFlowPart] = []
    gluing = ElDiagram()
    gluing.add_object("S", disc([c.stock]))
    for copy_id, info in c.flows.items():
        links = prim.fl_preimage(copy_id)
        ctlinks = tuple(k for k in prim.ctlinks if prim.ct[k] in links)
        if info.side == "in":
            incid = dict(inflows=(info.incidence,), down={info.incidence: c.stock}, in_={info.incidence: copy_id})
            incid.update(outflows=(), up={}, out={})
        else:
            incid = dict(outflows=(info.incidence,), up={info.incidence: c.stock}, out={info.incidence: copy_id})
            incid.update(inflows=(), down={}, in_={})
        d = StockFlowDiagram(
            PrimitiveDiagram(
                stocks=(c.stock,),
                flows=(copy_id,),
                links=links,
                ctlinks=ctlinks,
                st={k: c.stock for k in ctlinks},
                ct={k: prim.ct[k] for k in ctlinks},
                fl={l: copy_id for l in links},
                **incid,
            ),
            {copy_id: c.diagram.fn(copy_id)},
        )
        part = SingleFlowPart(d, c.stock, copy_id, info.side, info.incidence)
        parts.append(part)
        gluing.add_object(f"P:{copy_id}", d)
        gluing.add_arrow(
            f"g:{copy_id}",
            "S",
            f"P:{copy_id}",
            DiagramMorphism(gluing.objects["S"], d, stock_map={c.stock: c.stock}),
        )
    return parts, gluing
