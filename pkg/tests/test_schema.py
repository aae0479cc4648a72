from stockflow.diagram import assemble, disc
from stockflow.schema import PrimitiveDiagram, half_flows, is_closed, validate_primitive


def test_empty_diagram_is_valid():
    assert validate_primitive(PrimitiveDiagram()).ok


def test_sir_fixture_is_valid(sir):
    report = validate_primitive(sir.prim)
    assert report.ok
    assert len(sir.prim.stocks) == 3
    assert len(sir.prim.flows) == 2
    assert len(sir.prim.inflows) == 2
    assert len(sir.prim.outflows) == 2
    assert len(sir.prim.links) == 3
    assert len(sir.prim.ctlinks) == 3


def test_in_injectivity_violation_reported_once():
    prim = PrimitiveDiagram(
        stocks=("A",),
        flows=("f",),
        inflows=("i1", "i2"),
        down={"i1": "A", "i2": "A"},
        in_={"i1": "f", "i2": "f"},
    )
    report = validate_primitive(prim)
    assert not report.ok
    inj = [v for v in report.violations if v.kind == "injectivity"]
    assert len(inj) == 1
    assert "in" in inj[0].message


def test_totality_and_codomain_failures_all_reported():
    prim = PrimitiveDiagram(
        stocks=("A",),
        flows=("f",),
        links=("l1", "l2"),
        fl={"l1": "g"},  # l2 missing, l1 lands outside the flow carrier
    )
    report = validate_primitive(prim)
    kinds = sorted(v.kind for v in report.violations)
    assert kinds == ["codomain", "totality"]


def test_duplicate_carrier_ids_reported():
    report = validate_primitive(PrimitiveDiagram(stocks=("A", "A")))
    assert [v.kind for v in report.violations] == ["duplicate"]


def test_validation_is_pure(sir):
    assert validate_primitive(sir.prim) == validate_primitive(sir.prim)


def test_half_flows_sir_closed(sir):
    assert half_flows(sir.prim) == (frozenset(), frozenset())
    assert is_closed(sir.prim)


def test_free_hanging_flow_is_not_a_half_flow():
    free = assemble(flows={"f": "1.5"})
    inflow_only, outflow_only = half_flows(free.prim)
    assert "f" not in inflow_only and "f" not in outflow_only
    # but it still leaves the diagram open
    assert not is_closed(free.prim)


def test_half_flow_detection():
    d = assemble(
        stocks=["S", "I", "R"],
        flows={"Infection": "0.3*l1*l2", "Recovery": "0.1*l3"},
        inflows={"Infection": "I"},  # Recovery's inflow incidence removed
        outflows={"Infection": "S", "Recovery": "I"},
        links=[("l1", "Infection", "S"), ("l2", "Infection", "I"), ("l3", "Recovery", "I")],
    )
    inflow_only, outflow_only = half_flows(d.prim)
    assert inflow_only == frozenset()
    assert outflow_only == frozenset({"Recovery"})
    assert not is_closed(d.prim)


def test_disc_is_closed():
    assert is_closed(disc(["A", "B"]).prim)


def test_half_flow_sets_disjoint(sir):
    # a flow cannot be inflow-only and outflow-only at once
    for d in (sir.prim, disc(["A"]).prim):
        a, b = half_flows(d)
        assert not (a & b)


def test_links_of_flow_enumeration(sir):
    assert sir.prim.fl_preimage("Infection") == ("l1", "l2")
    assert sir.prim.fl_preimage("Recovery") == ("l3",)
    assert sir.prim.source_stock("l1") == "S"
    assert sir.prim.source_stock("l3") == "I"
