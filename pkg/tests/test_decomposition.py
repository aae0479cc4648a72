import pytest

from stockflow.decomposition import (
    corolla,
    elements_category,
    recompose,
    single_flow_parts,
    unit_flow,
)
from stockflow.diagram import (
    assemble,
    check_flow_condition,
    check_naturality,
    disc,
    iso_check,
)
from stockflow.errors import InconsistentFlowFns, NonLocalLink, UnknownFlow, UnknownStock


@pytest.fixture
def selfloop():
    return assemble(
        stocks=["A"],
        flows={"f": "0.4*la"},
        inflows={"f": "A"},
        outflows={"f": "A"},
        links=[("la", "f", "A")],
    )


def test_corolla_of_i(sir):
    c = corolla(sir, "I")
    prim = c.diagram.prim
    assert prim.stocks == ("I",)
    assert set(prim.flows) == {"Infection#in", "Recovery#out"}
    assert set(prim.links) == {"l1", "l2", "l3"}
    assert set(prim.ctlinks) == {"ct:l2", "ct:l3"}  # l1 is a half link here
    assert prim.source_stock("l1") is None
    assert c.diagram.fn("Infection#in") == sir.fn("Infection")
    assert c.diagram.fn("Recovery#out") == sir.fn("Recovery")


def test_corolla_of_discrete_stock():
    c = corolla(disc(["A"]), "A")
    assert c.diagram.prim.stocks == ("A",)
    assert c.diagram.flows == ()


def test_corolla_unknown_stock(sir):
    with pytest.raises(UnknownStock):
        corolla(sir, "Q")


def test_corolla_self_flow(selfloop):
    c = corolla(selfloop, "A")
    prim = c.diagram.prim
    assert set(prim.flows) == {"f#in", "f#out"}
    assert set(prim.links) == {"la#in", "la#out"}
    assert prim.ct["ct:la"] == "la#in"
    assert str(c.diagram.fn("f#in")) == "0.4 * la#in"
    assert str(c.diagram.fn("f#out")) == "0.4 * la#out"


def test_corolla_rejects_nonlocal_link():
    d = assemble(
        stocks=["A", "B", "C"],
        flows={"f": "0.1*l1 + 0.2*l2"},
        inflows={"f": "B"},
        outflows={"f": "A"},
        links=[("l1", "f", "A"), ("l2", "f", "C")],  # C has no incidence of f
    )
    with pytest.raises(NonLocalLink):
        corolla(d, "C")


def test_unit_flow(sir):
    u = unit_flow(sir, "Infection")
    assert u.diagram.flows == ("Infection",)
    assert u.diagram.prim.links == ("l1", "l2")
    assert u.diagram.prim.stocks == ()
    assert unit_flow(sir, "Recovery").diagram.prim.links == ("l3",)
    with pytest.raises(UnknownFlow):
        unit_flow(sir, "nope")


def test_unit_flow_without_links():
    d = assemble(flows={"f": "5"})
    assert unit_flow(d, "f").diagram.prim.links == ()


def test_elements_category_shape(sir):
    el = elements_category(sir)
    assert len([k for k in el.objects if k.startswith("C:")]) == 3
    assert len([k for k in el.objects if k.startswith("U:")]) == 2
    assert len(el.arrows) == 4
    for arrow in el.arrows.values():
        assert check_naturality(arrow.morphism).ok
        report = check_flow_condition(arrow.morphism)
        assert report.ok and report.flows_checked == 1


def test_elements_category_discrete():
    el = elements_category(disc(["A", "B"]))
    assert len(el.objects) == 2
    assert len(el.arrows) == 0


def test_elements_category_self_flow(selfloop):
    el = elements_category(selfloop)
    assert len(el.objects) == 2  # one corolla, one unit flow
    assert len(el.arrows) == 2


def test_recompose_round_trip_sir(sir):
    back = recompose(elements_category(sir))
    assert back == sir  # id-preserving classes give back the exact diagram


def test_recompose_single_corolla(sir):
    c = corolla(sir, "I")
    el = elements_category(c.diagram)
    assert iso_check(recompose(el), c.diagram) is not None


def test_recompose_carrier_accounting(sir):
    el = elements_category(sir)
    copies = sum(len(el.objects[k].flows) for k in el.objects if k.startswith("C:"))
    assert copies == len(sir.prim.inflows) + len(sir.prim.outflows)
    back = recompose(el)
    assert len(back.flows) == len(sir.flows)


def test_recompose_self_flow_rejects_nonzero_fn(selfloop):
    with pytest.raises(InconsistentFlowFns):
        recompose(elements_category(selfloop))


def test_recompose_self_flow_zero_fn():
    zero = assemble(
        stocks=["A"],
        flows={"f": "0*la"},
        inflows={"f": "A"},
        outflows={"f": "A"},
        links=[("la", "f", "A")],
    )
    back = recompose(elements_category(zero))
    assert len(back.flows) == 1
    assert len(back.prim.links) == 1
    assert iso_check(back, zero) is not None


def test_single_flow_parts_corolla_i(sir):
    c = corolla(sir, "I")
    parts, gluing = single_flow_parts(c)
    assert len(parts) == 2
    rebuilt = recompose(gluing)
    assert rebuilt == c.diagram


def test_single_flow_parts_empty_corolla():
    c = corolla(disc(["A"]), "A")
    parts, gluing = single_flow_parts(c)
    assert parts == []
    assert len(gluing.objects) == 1
    assert recompose(gluing) == c.diagram


def test_single_flow_parts_self_flow(selfloop):
    c = corolla(selfloop, "A")
    parts, gluing = single_flow_parts(c)
    assert len(parts) == 2
    assert recompose(gluing) == c.diagram
