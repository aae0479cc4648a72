"""Stock & flow diagrams, their morphisms, and morphism checking.

A diagram is a primitive diagram plus one flow function per flow, each over
that flow's own link set. A morphism is six component maps, one per carrier;
it must commute with the seven structure maps (naturality) and satisfy the
flow-function condition: for every target flow with nonempty preimage, the
target function equals the sum of the source functions restricted along the
link map. Flows with empty preimage are exempt, which is what lets a
stock-only diagram map into anything and makes the gluing constructions in
:mod:`stockflow.colimit` work.

Function equality is decided numerically: both sides are evaluated at a
fixed number of seeded pseudo-random points of the link domain and compared
with a relative tolerance. Exact equality of continuous functions is
undecidable; a seeded sample is reproducible and, for the polynomial-style
functions used in practice, discriminates everything we need.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import ForeignLink, MissingFlowFn, MorphismError, TooLarge, DiagramError
from .expr import FlowExpr, LinkEnv, as_expr, evaluate, free_links, precompose, sum_exprs, uses_time
from .schema import ARROWS, CARRIERS, PrimitiveDiagram, ValidationReport, Violation, validate_primitive

__all__ = [
    "EqCheckConfig",
    "DEFAULT_EQ",
    "StockFlowDiagram",
    "DiagramMorphism",
    "FlowConditionReport",
    "make_diagram",
    "assemble",
    "disc",
    "canonical_disc_map",
    "identity_morphism",
    "compose",
    "check_naturality",
    "check_flow_condition",
    "iso_check",
    "invert",
    "exprs_numerically_equal",
]


@dataclass(frozen=True)
class EqCheckConfig:
    """Sampling scheme for numerical function comparison."""

    samples: int = 100
    tol: float = 1e-9
    seed: int = 42
    low: float = 0.0
    high: float = 10.0

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


DEFAULT_EQ = EqCheckConfig()


def sample_envs(variables: Sequence[str], cfg: EqCheckConfig) -> list[dict[str, float]]:
    """Seeded sample points in [low, high]^variables, in a fixed order."""
    rng = random.Random(cfg.seed)
    return [{v: rng.uniform(cfg.low, cfg.high) for v in variables} for _ in range(cfg.samples)]


def exprs_numerically_equal(
    a: FlowExpr, b: FlowExpr, variables: Sequence[str], cfg: EqCheckConfig = DEFAULT_EQ
) -> tuple[bool, float]:
    """Compare two expressions over a shared variable list.

    Returns (equal, max relative deviation). The deviation is
    |x - y| / max(1, |x|, |y|), so small absolute noise near zero does not
    drown the check and large values are compared relatively.
    """
    worst = 0.0
    for env in sample_envs(variables, cfg):
        x = evaluate(a, LinkEnv(env))
        y = evaluate(b, LinkEnv(env))
        dev = abs(x - y) / max(1.0, abs(x), abs(y))
        worst = max(worst, dev)
    return worst <= cfg.tol, worst


@dataclass(frozen=True)
class StockFlowDiagram:
    prim: PrimitiveDiagram
    flow_fns: dict[str, FlowExpr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "flow_fns", dict(self.flow_fns))

    # Carrier shorthands used throughout the package.
    @property
    def stocks(self) -> tuple[str, ...]:
        return self.prim.stocks

    @property
    def flows(self) -> tuple[str, ...]:
        return self.prim.flows

    def fn(self, flow: str) -> FlowExpr:
        return self.flow_fns[flow]


def make_diagram(prim: PrimitiveDiagram, fns: Mapping[str, FlowExpr | str]) -> StockFlowDiagram:
    """Assemble and validate a diagram.

    Requires a valid primitive, a function for every flow, and every
    function's free links contained in its flow's link set. The time
    variable is reserved for exogenous inputs and rejected here.
    """
    report = validate_primitive(prim)
    if not report.ok:
        raise DiagramError("invalid primitive diagram:\n" + report.describe())
    parsed: dict[str, FlowExpr] = {}
    for f in prim.flows:
        if f not in fns:
            raise MissingFlowFn(f)
        e = as_expr(fns[f])
        if uses_time(e):
            raise ForeignLink(f, "t")
        own = set(prim.fl_preimage(f))
        for v in sorted(free_links(e)):
            if v not in own:
                raise ForeignLink(f, v)
        parsed[f] = e
    return StockFlowDiagram(prim, parsed)


def assemble(
    stocks: Sequence[str] = (),
    flows: Mapping[str, FlowExpr | str] | None = None,
    inflows: Mapping[str, str] | None = None,
    outflows: Mapping[str, str] | None = None,
    links: Sequence[tuple[str, str, str | None]] = (),
) -> StockFlowDiagram:
    """Build a diagram from the record-level description used by files.

    ``inflows``/``outflows`` map a flow id to the stock it enters/leaves;
    the incidence element reuses the flow id (legal, since in and out are
    injective). ``links`` rows are (link id, flow id, source stock or None);
    a sourced link gets a CTLink named ``ct:<link>``.
    """
    flows = dict(flows or {})
    inflows = dict(inflows or {})
    outflows = dict(outflows or {})
    ctlinks = [(f"ct:{l}", s, l) for (l, _, s) in links if s is not None]
    prim = PrimitiveDiagram(
        stocks=tuple(stocks),
        flows=tuple(flows),
        inflows=tuple(inflows),
        outflows=tuple(outflows),
        links=tuple(l for (l, _, _) in links),
        ctlinks=tuple(c for (c, _, _) in ctlinks),
        up=dict(outflows),
        out={f: f for f in outflows},
        down=dict(inflows),
        in_={f: f for f in inflows},
        st={c: s for (c, s, _) in ctlinks},
        ct={c: l for (c, _, l) in ctlinks},
        fl={l: f for (l, f, _) in links},
    )
    return make_diagram(prim, flows)


def disc(stocks: Sequence[str]) -> StockFlowDiagram:
    """The discrete diagram: the given stocks and nothing else."""
    return StockFlowDiagram(PrimitiveDiagram(stocks=tuple(stocks)))


@dataclass
class DiagramMorphism:
    """Six component maps from the carriers of ``src`` to those of ``tgt``.

    ``certified`` records the sampling config under which the flow-function
    condition succeeded, so downstream gluing code can skip re-checking.
    """

    src: StockFlowDiagram
    tgt: StockFlowDiagram
    stock_map: dict[str, str] = field(default_factory=dict)
    flow_map: dict[str, str] = field(default_factory=dict)
    inflow_map: dict[str, str] = field(default_factory=dict)
    outflow_map: dict[str, str] = field(default_factory=dict)
    link_map: dict[str, str] = field(default_factory=dict)
    ctlink_map: dict[str, str] = field(default_factory=dict)
    certified: EqCheckConfig | None = None

    _COMPONENTS = {
        "stocks": "stock_map",
        "flows": "flow_map",
        "inflows": "inflow_map",
        "outflows": "outflow_map",
        "links": "link_map",
        "ctlinks": "ctlink_map",
    }

    def component(self, carrier: str) -> dict[str, str]:
        return getattr(self, self._COMPONENTS[carrier])

    def flow_preimage(self, target_flow: str) -> tuple[str, ...]:
        return tuple(f for f in self.src.flows if self.flow_map[f] == target_flow)

    def retarget(self, new_tgt: StockFlowDiagram) -> "DiagramMorphism":
        """Same maps into a different target object (its carriers must
        contain every image). Certification does not carry over."""
        return replace(self, tgt=new_tgt, certified=None)


def identity_morphism(x: StockFlowDiagram) -> DiagramMorphism:
    m = DiagramMorphism(x, x)
    for carrier in CARRIERS:
        m.component(carrier).update({e: e for e in x.prim.carrier(carrier)})
    return m


def compose(f: DiagramMorphism, g: DiagramMorphism) -> DiagramMorphism:
    """g after f. Composing two checked morphisms yields a checkable one;
    the composite is returned unstamped and can be re-checked if needed."""
    if f.tgt is not g.src and f.tgt != g.src:
        raise MorphismError("morphisms are not composable")
    out = DiagramMorphism(f.src, g.tgt)
    for carrier in CARRIERS:
        fc, gc = f.component(carrier), g.component(carrier)
        out.component(carrier).update({x: gc[y] for x, y in fc.items()})
    return out


def canonical_disc_map(x: StockFlowDiagram) -> DiagramMorphism:
    """The unique morphism from the discrete diagram on x's stocks into x:
    identity on stocks, empty elsewhere. Its flow condition is vacuous
    because every flow of x has empty preimage."""
    m = DiagramMorphism(disc(x.stocks), x)
    m.stock_map.update({s: s for s in x.stocks})
    return m


def check_naturality(m: DiagramMorphism) -> ValidationReport:
    """Verify totality of the six components and commutation of all seven
    structure-map squares; every failure is reported."""
    violations: list[Violation] = []
    for carrier in CARRIERS:
        comp = m.component(carrier)
        tgt_set = set(m.tgt.prim.carrier(carrier))
        for e in m.src.prim.carrier(carrier):
            if e not in comp:
                violations.append(Violation("totality", e, f"component on {carrier} undefined at {e!r}"))
            elif comp[e] not in tgt_set:
                violations.append(
                    Violation("codomain", e, f"component on {carrier} sends {e!r} outside the target carrier")
                )
    if violations:
        return ValidationReport(tuple(violations))

    for arrow, (src_carrier, dst_carrier) in ARROWS.items():
        fsrc = m.component(src_carrier)
        fdst = m.component(dst_carrier)
        a_src = m.src.prim.arrow(arrow)
        a_tgt = m.tgt.prim.arrow(arrow)
        for e in m.src.prim.carrier(src_carrier):
            if a_tgt[fsrc[e]] != fdst[a_src[e]]:
                violations.append(
                    Violation(
                        "naturality",
                        e,
                        f"square {arrow} fails at {e!r}: "
                        f"{arrow}(F({e!r})) = {a_tgt[fsrc[e]]!r} but F({arrow}({e!r})) = {fdst[a_src[e]]!r}",
                    )
                )
    return ValidationReport(tuple(violations))


@dataclass(frozen=True)
class FlowConditionReport:
    violations: tuple[Violation, ...]
    flows_checked: int

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.ok:
            return f"ok ({self.flows_checked} flows checked)"
        return "\n".join(f"[{v.kind}] {v.subject}: {v.message}" for v in self.violations)


def check_flow_condition(m: DiagramMorphism, cfg: EqCheckConfig = DEFAULT_EQ) -> FlowConditionReport:
    """For each target flow with nonempty preimage, numerically compare the
    target function against the sum of preimage functions restricted along
    the link map. Flows with empty preimage are skipped by definition. On
    success the morphism is stamped as certified under ``cfg``."""
    violations: list[Violation] = []
    checked = 0
    for g in m.tgt.flows:
        pre = m.flow_preimage(g)
        if not pre:
            continue
        checked += 1
        candidate = sum_exprs([precompose(m.src.fn(f), m.link_map) for f in pre])
        variables = m.tgt.prim.fl_preimage(g)
        equal, dev = exprs_numerically_equal(m.tgt.fn(g), candidate, variables, cfg)
        if not equal:
            violations.append(
                Violation(
                    "flow-fn",
                    g,
                    f"target function of {g!r} differs from the summed preimage functions "
                    f"(max deviation {dev:.3g} over {cfg.samples} samples)",
                )
            )
    if not violations:
        m.certified = cfg
    return FlowConditionReport(tuple(violations), checked)


def invert(m: DiagramMorphism) -> DiagramMorphism:
    """Invert a morphism whose components are bijections."""
    out = DiagramMorphism(m.tgt, m.src)
    for carrier in CARRIERS:
        comp = m.component(carrier)
        if len(set(comp.values())) != len(comp) or len(comp) != len(m.tgt.prim.carrier(carrier)):
            raise MorphismError(f"component on {carrier} is not a bijection")
        out.component(carrier).update({y: x for x, y in comp.items()})
    return out


# -- isomorphism search -------------------------------------------------------

def _flow_profile(d: StockFlowDiagram, f: str):
    prim = d.prim
    links = prim.fl_preimage(f)
    sourced = sum(1 for l in links if prim.source_stock(l) is not None)
    return (
        prim.inflow_of_flow(f) is not None,
        prim.outflow_of_flow(f) is not None,
        len(links),
        sourced,
    )


def _stock_profile(d: StockFlowDiagram, s: str):
    prim = d.prim
    return (
        len(prim.inflow_incidences_at(s)),
        len(prim.outflow_incidences_at(s)),
        len(prim.ctlinks_at(s)),
    )


def iso_check(
    x: StockFlowDiagram,
    y: StockFlowDiagram,
    cfg: EqCheckConfig = DEFAULT_EQ,
    max_carrier: int = 20,
) -> DiagramMorphism | None:
    """Search for an isomorphism x -> y, or return None.

    Backtracks over flow and stock bijections pruned by local degree
    profiles; incidence and ctlink components are then forced because in,
    out and ct are injective. Per-flow link matchings are pruned by the
    numerical function comparison, and the final candidate is fully
    re-checked in both directions. Intended for the small carriers used in
    tests; carriers above ``max_carrier`` raise TooLarge.
    """
    for carrier in CARRIERS:
        nx = len(x.prim.carrier(carrier))
        ny = len(y.prim.carrier(carrier))
        if nx != ny:
            return None
        if max(nx, ny) > max_carrier:
            raise TooLarge(carrier, max(nx, ny), max_carrier)

    xp, yp = x.prim, y.prim
    flow_candidates = {
        f: tuple(g for g in y.flows if _flow_profile(y, g) == _flow_profile(x, f)) for f in x.flows
    }
    stock_candidates = {
        s: tuple(t for t in y.stocks if _stock_profile(y, t) == _stock_profile(x, s)) for s in x.stocks
    }
    if any(not c for c in flow_candidates.values()) or any(not c for c in stock_candidates.values()):
        return None

    flow_asgn: dict[str, str] = {}
    stock_asgn: dict[str, str] = {}
    used_flows: set[str] = set()
    used_stocks: set[str] = set()

    def bind_stock(s: str, t: str, trail: list[str]) -> bool:
        if s in stock_asgn:
            return stock_asgn[s] == t
        if t in used_stocks or t not in stock_candidates[s]:
            return False
        stock_asgn[s] = t
        used_stocks.add(t)
        trail.append(s)
        return True

    def unbind(trail: list[str]) -> None:
        for s in trail:
            used_stocks.discard(stock_asgn.pop(s))

    def match_links(f: str, g: str) -> dict[str, str] | None:
        """A link bijection fl^-1(f) -> fl^-1(g) respecting sources and the
        flow functions, or None."""
        xlinks = xp.fl_preimage(f)
        ylinks = yp.fl_preimage(g)
        groups: dict[str | None, list[str]] = {}
        for l in xlinks:
            src = xp.source_stock(l)
            key = stock_asgn[src] if src is not None else None
            groups.setdefault(key, []).append(l)
        ygroups: dict[str | None, list[str]] = {}
        for l in ylinks:
            ygroups.setdefault(yp.source_stock(l), []).append(l)
        if set(groups) != set(ygroups):
            return None
        if any(len(groups[k]) != len(ygroups[k]) for k in groups):
            return None
        keys = sorted(groups, key=lambda k: ("" if k is None else k))
        pools = [itertools.permutations(ygroups[k]) for k in keys]
        for combo in itertools.product(*pools):
            link_map: dict[str, str] = {}
            for k, perm in zip(keys, combo):
                link_map.update(zip(groups[k], perm))
            candidate = precompose(x.fn(f), link_map)
            equal, _ = exprs_numerically_equal(y.fn(g), candidate, ylinks, cfg)
            if equal:
                return link_map
        return None

    def assign_flows(index: int) -> DiagramMorphism | None:
        if index == len(x.flows):
            return assign_stocks([s for s in x.stocks if s not in stock_asgn], 0)
        f = x.flows[index]
        for g in flow_candidates[f]:
            if g in used_flows:
                continue
            trail: list[str] = []
            ok = True
            fi, gi = xp.inflow_of_flow(f), yp.inflow_of_flow(g)
            if fi is not None:
                ok = gi is not None and bind_stock(xp.down[fi], yp.down[gi], trail)
            fo, go = xp.outflow_of_flow(f), yp.outflow_of_flow(g)
            if ok and fo is not None:
                ok = go is not None and bind_stock(xp.up[fo], yp.up[go], trail)
            if ok and not xp.fl_preimage(f):
                ok, _ = exprs_numerically_equal(x.fn(f), y.fn(g), (), cfg)
            if ok:
                flow_asgn[f] = g
                used_flows.add(g)
                result = assign_flows(index + 1)
                if result is not None:
                    return result
                used_flows.discard(g)
                del flow_asgn[f]
            unbind(trail)
        return None

    def assign_stocks(remaining: list[str], index: int) -> DiagramMorphism | None:
        if index == len(remaining):
            return finish()
        s = remaining[index]
        for t in stock_candidates[s]:
            if t in used_stocks:
                continue
            stock_asgn[s] = t
            used_stocks.add(t)
            result = assign_stocks(remaining, index + 1)
            if result is not None:
                return result
            used_stocks.discard(t)
            del stock_asgn[s]
        return None

    def finish() -> DiagramMorphism | None:
        m = DiagramMorphism(x, y)
        m.stock_map.update(stock_asgn)
        m.flow_map.update(flow_asgn)
        for f, g in flow_asgn.items():
            link_map = match_links(f, g)
            if link_map is None:
                return None
            m.link_map.update(link_map)
            fi, gi = xp.inflow_of_flow(f), yp.inflow_of_flow(g)
            if fi is not None:
                m.inflow_map[fi] = gi
            fo, go = xp.outflow_of_flow(f), yp.outflow_of_flow(g)
            if fo is not None:
                m.outflow_map[fo] = go
        for c in xp.ctlinks:
            image_link = m.link_map.get(xp.ct[c])
            if image_link is None:
                return None
            yc = yp.ctlink_of_link(image_link)
            if yc is None or yp.st[yc] != stock_asgn[xp.st[c]]:
                return None
            m.ctlink_map[c] = yc
        if len(set(m.ctlink_map.values())) != len(xp.ctlinks):
            return None
        if not check_naturality(m).ok:
            return None
        if not check_flow_condition(m, cfg).ok:
            return None
        back = invert(m)
        if not check_flow_condition(back, cfg).ok:
            return None
        return m

    return assign_flows(0)
