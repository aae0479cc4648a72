"""Primitive stock & flow diagrams.

A primitive diagram is a functor from the six-object shape category

    Outflow --up--> Stock <--down-- Inflow
    Outflow --out--> Flow <--in-- Inflow
    CTLink --st--> Stock,  CTLink --ct--> Link,  Link --fl--> Flow

into finite sets, where ``in``, ``out`` and ``ct`` are injective: a flow has
at most one inflow incidence and at most one outflow incidence, and a link
has at most one source stock. Links without a CTLink are "half links" (they
hang free, awaiting an exogenous signal or a gluing); flows with an inflow
or an outflow incidence but not both are "half flows", the open ports used
by every composition operation in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

CARRIERS = ("stocks", "flows", "inflows", "outflows", "links", "ctlinks")

# arrow name -> (source carrier, target carrier)
ARROWS = {
    "up": ("outflows", "stocks"),
    "out": ("outflows", "flows"),
    "down": ("inflows", "stocks"),
    "in": ("inflows", "flows"),
    "st": ("ctlinks", "stocks"),
    "ct": ("ctlinks", "links"),
    "fl": ("links", "flows"),
}

MONIC_ARROWS = ("in", "out", "ct")


@dataclass(frozen=True)
class Violation:
    kind: str      # "duplicate" | "totality" | "codomain" | "injectivity" | ...
    subject: str   # offending identifier
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"[{v.kind}] {v.subject}: {v.message}" for v in self.violations)


def _tup(xs: Iterable[str]) -> tuple[str, ...]:
    return tuple(xs)


def _map(m: Mapping[str, str]) -> dict[str, str]:
    return dict(m)


@dataclass(frozen=True)
class PrimitiveDiagram:
    """Carriers (insertion-ordered, determining all serialization and
    colimit-representative order) plus the seven structure maps.

    Identifiers are opaque strings, unique within their carrier; the same id
    may appear in different carriers.
    """

    stocks: tuple[str, ...] = ()
    flows: tuple[str, ...] = ()
    inflows: tuple[str, ...] = ()
    outflows: tuple[str, ...] = ()
    links: tuple[str, ...] = ()
    ctlinks: tuple[str, ...] = ()
    up: dict[str, str] = field(default_factory=dict)
    out: dict[str, str] = field(default_factory=dict)
    down: dict[str, str] = field(default_factory=dict)
    in_: dict[str, str] = field(default_factory=dict)
    st: dict[str, str] = field(default_factory=dict)
    ct: dict[str, str] = field(default_factory=dict)
    fl: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in CARRIERS:
            object.__setattr__(self, name, _tup(getattr(self, name)))
        for name in ARROWS:
            attr = _attr(name)
            object.__setattr__(self, attr, _map(getattr(self, attr)))

    def carrier(self, name: str) -> tuple[str, ...]:
        return getattr(self, name)

    def arrow(self, name: str) -> dict[str, str]:
        return getattr(self, _attr(name))

    # -- derived accessors -------------------------------------------------

    def fl_preimage(self, flow: str) -> tuple[str, ...]:
        """Links of a flow, in carrier order."""
        return tuple(l for l in self.links if self.fl[l] == flow)

    def ctlink_of_link(self, link: str) -> str | None:
        for c in self.ctlinks:
            if self.ct[c] == link:
                return c
        return None

    def source_stock(self, link: str) -> str | None:
        """The stock a link reads from, or None for a half link."""
        c = self.ctlink_of_link(link)
        return None if c is None else self.st[c]

    def inflow_of_flow(self, flow: str) -> str | None:
        for i in self.inflows:
            if self.in_[i] == flow:
                return i
        return None

    def outflow_of_flow(self, flow: str) -> str | None:
        for o in self.outflows:
            if self.out[o] == flow:
                return o
        return None

    def inflow_incidences_at(self, stock: str) -> tuple[str, ...]:
        return tuple(i for i in self.inflows if self.down[i] == stock)

    def outflow_incidences_at(self, stock: str) -> tuple[str, ...]:
        return tuple(o for o in self.outflows if self.up[o] == stock)

    def ctlinks_at(self, stock: str) -> tuple[str, ...]:
        return tuple(c for c in self.ctlinks if self.st[c] == stock)


def _attr(arrow: str) -> str:
    return "in_" if arrow == "in" else arrow


def validate_primitive(d: PrimitiveDiagram) -> ValidationReport:
    """Report every structural defect of ``d``; never raises.

    Checks, in order: carrier-internal id uniqueness, totality of each
    structure map on exactly its declared carrier, codomain membership, and
    injectivity of in/out/ct.
    """
    violations: list[Violation] = []
    for name in CARRIERS:
        seen: set[str] = set()
        for x in d.carrier(name):
            if x in seen:
                violations.append(Violation("duplicate", x, f"repeated id in carrier {name}"))
            seen.add(x)

    for arrow, (src, dst) in ARROWS.items():
        m = d.arrow(arrow)
        src_set = set(d.carrier(src))
        dst_set = set(d.carrier(dst))
        for x in d.carrier(src):
            if x not in m:
                violations.append(Violation("totality", x, f"{arrow} undefined on {src[:-1]} {x!r}"))
        for x, y in m.items():
            if x not in src_set:
                violations.append(Violation("totality", x, f"{arrow} defined on {x!r}, not in carrier {src}"))
            elif y not in dst_set:
                violations.append(Violation("codomain", x, f"{arrow}({x!r}) = {y!r} is not in carrier {dst}"))

    for arrow in MONIC_ARROWS:
        m = d.arrow(arrow)
        src, _ = ARROWS[arrow]
        by_value: dict[str, list[str]] = {}
        for x in d.carrier(src):
            if x in m:
                by_value.setdefault(m[x], []).append(x)
        for y, xs in by_value.items():
            if len(xs) > 1:
                violations.append(
                    Violation("injectivity", y, f"{arrow} sends {', '.join(map(repr, xs))} to the same element {y!r}")
                )

    return ValidationReport(tuple(violations))


def half_flows(d: PrimitiveDiagram) -> tuple[frozenset[str], frozenset[str]]:
    """Flows with only an inflow incidence, and flows with only an outflow
    incidence. A flow with no incidence at all (free hanging) is in neither
    set."""
    has_in = {d.in_[i] for i in d.inflows}
    has_out = {d.out[o] for o in d.outflows}
    return frozenset(has_in - has_out), frozenset(has_out - has_in)


def is_closed(d: PrimitiveDiagram) -> bool:
    """True iff there are no half flows and no free-hanging flows.

    Free-hanging flows are not half flows (they have no incidence at all),
    but they leave the diagram just as open, so closedness requires every
    flow to carry at least one incidence.
    """
    inflow_only, outflow_only = half_flows(d)
    if inflow_only or outflow_only:
        return False
    incident = {d.in_[i] for i in d.inflows} | {d.out[o] for o in d.outflows}
    return all(f in incident for f in d.flows)
