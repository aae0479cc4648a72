"""Pushouts and finite colimits of diagrams.

Everything here is a quotient of disjoint unions of finite sets, computed
carrier by carrier with a union-find, then reassembled into a diagram:
structure maps are induced on equivalence classes, and each glued flow
receives a function determined by the class rule below.

Class rule for flow functions. Fix a glued flow class c. Every constituent
diagram whose leg hits c with a nonempty flow preimage proposes a candidate:
the sum of its preimage functions with links renamed along its leg. All
candidates must agree numerically (they do whenever the input morphisms
satisfy the flow-function condition); the first proposer in insertion order
supplies the function. A class no constituent merges into is a singleton
and simply inherits its one function. This covers both the surjective
situation, where the apex sum equals each side's sum, and gluing along
flow-free shapes such as discrete diagrams, where every flow class is
inherited.

Class identifiers are the id of the least member in insertion order, with a
``~2``, ``~3``, ... suffix when two classes in the same carrier would
otherwise collide. Gluings that merge nothing therefore preserve ids, which
keeps decompose/recompose round trips and surgery results readable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from .diagram import (
    DEFAULT_EQ,
    DiagramMorphism,
    EqCheckConfig,
    StockFlowDiagram,
    check_flow_condition,
    check_naturality,
    compose,
    exprs_numerically_equal,
)
from .errors import InconsistentFlowFns, InvalidPushout, MorphismError
from .expr import FlowExpr, precompose, sum_exprs
from .schema import ARROWS, CARRIERS, PrimitiveDiagram, validate_primitive

__all__ = [
    "FinSetPushout",
    "finset_pushout",
    "SpanOfDiagrams",
    "DiagramPushout",
    "presheaf_pushout",
    "pushout_mediator",
    "ElArrow",
    "ElDiagram",
    "colimit_el",
]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            # keep the smaller index as root so the least member is the
            # representative
            if ri > rj:
                ri, rj = rj, ri
            self.parent[rj] = ri


def _quotient(
    elements: Sequence[Hashable],
    pairs: Iterable[tuple[Hashable, Hashable]],
    name_of: Callable[[Hashable], str],
) -> tuple[tuple[str, ...], dict[Hashable, str]]:
    """Quotient ``elements`` by the equivalence generated by ``pairs``.

    Returns the class names in order of first appearance and the map from
    element to class name. Names are the least member's name, deduplicated
    deterministically with ``~k`` suffixes.
    """
    index = {e: i for i, e in enumerate(elements)}
    uf = _UnionFind(len(elements))
    for a, b in pairs:
        uf.union(index[a], index[b])
    used: set[str] = set()
    root_name: dict[int, str] = {}
    names: list[str] = []
    cls: dict[Hashable, str] = {}
    for i, e in enumerate(elements):
        r = uf.find(i)
        if r not in root_name:
            base = name_of(elements[r])
            name = base
            k = 2
            while name in used:
                name = f"{base}~{k}"
                k += 1
            used.add(name)
            root_name[r] = name
            names.append(name)
        cls[e] = root_name[r]
    return tuple(names), cls


@dataclass(frozen=True)
class FinSetPushout:
    """Pushout of two functions out of a shared finite set.

    ``left``/``right`` are the injections of the two legs into the apex;
    ``class_map`` sends each tagged element of the disjoint union
    (("L", b) or ("R", c)) to its class.
    """

    apex: tuple[str, ...]
    left: dict[str, str]
    right: dict[str, str]
    class_map: dict[tuple[str, str], str]


def finset_pushout(
    shared: Sequence[str],
    left_set: Sequence[str],
    right_set: Sequence[str],
    f: Mapping[str, str],
    g: Mapping[str, str],
) -> FinSetPushout:
    """Pushout of ``left_set <-f- shared -g-> right_set`` in finite sets:
    the disjoint union of the legs modulo f(a) ~ g(a)."""
    elements: list[tuple[str, str]] = [("L", b) for b in left_set] + [("R", c) for c in right_set]
    pairs = [(("L", f[a]), ("R", g[a])) for a in shared]
    names, cls = _quotient(elements, pairs, lambda e: e[1])
    return FinSetPushout(
        apex=names,
        left={b: cls[("L", b)] for b in left_set},
        right={c: cls[("R", c)] for c in right_set},
        class_map=cls,
    )


# -- colimits of diagrams -----------------------------------------------------

@dataclass
class ElArrow:
    src: str
    tgt: str
    morphism: DiagramMorphism


@dataclass
class ElDiagram:
    """A finite free diagram of diagrams: named objects and generating
    arrows between them. The index category is free, so there are no
    composition relations to respect."""

    objects: dict[str, StockFlowDiagram] = field(default_factory=dict)
    arrows: dict[str, ElArrow] = field(default_factory=dict)

    def add_object(self, key: str, d: StockFlowDiagram) -> None:
        if key in self.objects:
            raise ValueError(f"duplicate object key {key!r}")
        self.objects[key] = d

    def add_arrow(self, key: str, src: str, tgt: str, m: DiagramMorphism) -> None:
        if key in self.arrows:
            raise ValueError(f"duplicate arrow key {key!r}")
        if src not in self.objects or tgt not in self.objects:
            raise ValueError(f"arrow {key!r} references unknown objects")
        if m.src != self.objects[src] or m.tgt != self.objects[tgt]:
            raise MorphismError(f"arrow {key!r}: morphism endpoints do not match its objects")
        self.arrows[key] = ElArrow(src, tgt, m)


def colimit_el(
    d: ElDiagram, cfg: EqCheckConfig = DEFAULT_EQ
) -> tuple[StockFlowDiagram, dict[str, DiagramMorphism]]:
    """Colimit of a free diagram of diagrams, with the legs from every
    object.

    Computed as the coequalizer of the two maps out of the coproduct of
    arrow sources into the coproduct of objects: carrier by carrier, the
    disjoint union of all object carriers is quotiented by m(e) ~ e for
    every arrow m and element e of its source. Structure maps are induced
    on classes; flow functions follow the class rule in the module
    docstring. Raises InvalidPushout if the quotient breaks the injectivity
    of in/out/ct (no such diagram exists), and InconsistentFlowFns if two
    constituents propose numerically different functions for one glued
    flow.
    """
    obj_keys = list(d.objects)
    tagged: dict[str, list[tuple[str, str]]] = {}
    for carrier in CARRIERS:
        tagged[carrier] = [(k, e) for k in obj_keys for e in d.objects[k].prim.carrier(carrier)]

    cls: dict[str, dict[tuple[str, str], str]] = {}
    names: dict[str, tuple[str, ...]] = {}
    for carrier in CARRIERS:
        pairs = []
        for arrow in d.arrows.values():
            comp = arrow.morphism.component(carrier)
            for e in d.objects[arrow.src].prim.carrier(carrier):
                pairs.append(((arrow.src, e), (arrow.tgt, comp[e])))
        names[carrier], cls[carrier] = _quotient(tagged[carrier], pairs, lambda te: te[1])

    # induced structure maps, verified on every member rather than just the
    # representative so non-natural inputs fail loudly
    arrows_out: dict[str, dict[str, str]] = {a: {} for a in ARROWS}
    for arrow_name, (src_carrier, dst_carrier) in ARROWS.items():
        induced = arrows_out[arrow_name]
        for (k, e) in tagged[src_carrier]:
            c = cls[src_carrier][(k, e)]
            value = cls[dst_carrier][(k, d.objects[k].prim.arrow(arrow_name)[e])]
            if c in induced and induced[c] != value:
                raise MorphismError(
                    f"gluing does not respect {arrow_name}: class {c!r} maps to both "
                    f"{induced[c]!r} and {value!r}"
                )
            induced[c] = value

    prim = PrimitiveDiagram(
        stocks=names["stocks"],
        flows=names["flows"],
        inflows=names["inflows"],
        outflows=names["outflows"],
        links=names["links"],
        ctlinks=names["ctlinks"],
        up=arrows_out["up"],
        out=arrows_out["out"],
        down=arrows_out["down"],
        in_=arrows_out["in"],
        st=arrows_out["st"],
        ct=arrows_out["ct"],
        fl=arrows_out["fl"],
    )
    report = validate_primitive(prim)
    if not report.ok:
        raise InvalidPushout(
            "gluing left the category of diagrams (in/out/ct would no longer be injective):\n"
            + report.describe()
        )

    # flow functions per class
    link_cls = cls["links"]
    flow_fns: dict[str, FlowExpr] = {}
    for c in names["flows"]:
        candidates: list[FlowExpr] = []
        for k in obj_keys:
            obj = d.objects[k]
            pre = [f for f in obj.flows if cls["flows"][(k, f)] == c]
            if not pre:
                continue
            rename = {l: link_cls[(k, l)] for f in pre for l in obj.prim.fl_preimage(f)}
            candidates.append(sum_exprs([precompose(obj.fn(f), rename) for f in pre]))
        variables = prim.fl_preimage(c)
        for other in candidates[1:]:
            equal, dev = exprs_numerically_equal(candidates[0], other, variables, cfg)
            if not equal:
                raise InconsistentFlowFns(c, dev)
        flow_fns[c] = candidates[0]

    result = StockFlowDiagram(prim, flow_fns)
    legs: dict[str, DiagramMorphism] = {}
    for k in obj_keys:
        leg = DiagramMorphism(d.objects[k], result)
        for carrier in CARRIERS:
            leg.component(carrier).update(
                {e: cls[carrier][(k, e)] for e in d.objects[k].prim.carrier(carrier)}
            )
        leg.certified = cfg  # its flow condition is the consistency just checked
        legs[k] = leg
    return result, legs


@dataclass
class SpanOfDiagrams:
    """Two morphisms out of a common apex. ``validate`` checks naturality
    always and the flow condition unless the leg is already certified."""

    apex: StockFlowDiagram
    left: DiagramMorphism
    right: DiagramMorphism

    def validate(self, cfg: EqCheckConfig = DEFAULT_EQ) -> None:
        for name, leg in (("left", self.left), ("right", self.right)):
            if leg.src != self.apex:
                raise MorphismError(f"{name} leg does not start at the apex")
            report = check_naturality(leg)
            if not report.ok:
                raise MorphismError(f"{name} leg is not natural:\n" + report.describe())
            if leg.certified is None:
                flow_report = check_flow_condition(leg, cfg)
                if not flow_report.ok:
                    raise MorphismError(
                        f"{name} leg violates the flow-function condition:\n" + flow_report.describe()
                    )


@dataclass
class DiagramPushout:
    diagram: StockFlowDiagram
    p1: DiagramMorphism  # from the left target
    p2: DiagramMorphism  # from the right target
    from_apex: DiagramMorphism


def presheaf_pushout(span: SpanOfDiagrams, cfg: EqCheckConfig = DEFAULT_EQ) -> DiagramPushout:
    """Pushout of ``left.tgt <- apex -> right.tgt``, carrier by carrier.

    The left target is inserted first, so its ids win class naming."""
    span.validate(cfg)
    el = ElDiagram()
    el.add_object("Z", span.left.tgt)
    el.add_object("Y", span.right.tgt)
    el.add_object("X", span.apex)
    el.add_arrow("s1", "X", "Z", span.left)
    el.add_arrow("s2", "X", "Y", span.right)
    result, legs = colimit_el(el, cfg)
    return DiagramPushout(result, legs["Z"], legs["Y"], legs["X"])


def pushout_mediator(
    po: DiagramPushout,
    q1: DiagramMorphism,
    q2: DiagramMorphism,
    cfg: EqCheckConfig = DEFAULT_EQ,
) -> DiagramMorphism:
    """The unique map out of the pushout commuting with a cocone.

    Because the pushout legs are jointly surjective, the mediator is forced
    pointwise; this constructs it, checks it is well defined on every
    class, natural, and flow-valid, and returns it. Used to exercise the
    universal property in tests.
    """
    if q1.tgt != q2.tgt:
        raise MorphismError("cocone legs have different targets")
    for name, leg in (("q1", q1), ("q2", q2)):
        report = check_naturality(leg)
        if not report.ok:
            raise MorphismError(f"cocone leg {name} is not natural:\n" + report.describe())
    w = q1.tgt
    out = DiagramMorphism(po.diagram, w)
    for carrier in CARRIERS:
        comp = out.component(carrier)
        for source, leg in ((q1, po.p1), (q2, po.p2)):
            q_comp = source.component(carrier)
            leg_comp = leg.component(carrier)
            for e, c in leg_comp.items():
                value = q_comp[e]
                if c in comp and comp[c] != value:
                    raise MorphismError(
                        f"cocone does not coequalize: class {c!r} would map to both "
                        f"{comp[c]!r} and {value!r}"
                    )
                comp[c] = value
        missing = [c for c in po.diagram.prim.carrier(carrier) if c not in comp]
        if missing:
            raise MorphismError(f"pushout legs are not jointly surjective on {carrier}: {missing}")
    report = check_naturality(out)
    if not report.ok:
        raise MorphismError("mediator is not natural:\n" + report.describe())
    flow_report = check_flow_condition(out, cfg)
    if not flow_report.ok:
        raise MorphismError("mediator violates the flow-function condition:\n" + flow_report.describe())
    return out
