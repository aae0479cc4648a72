import pytest

from stockflow.diagram import (
    DEFAULT_EQ,
    DiagramMorphism,
    assemble,
    canonical_disc_map,
    check_flow_condition,
    check_naturality,
    compose,
    disc,
    identity_morphism,
    invert,
    iso_check,
    make_diagram,
)
from stockflow.errors import ForeignLink, MissingFlowFn, TooLarge, DiagramError
from stockflow.expr import parse
from stockflow.schema import PrimitiveDiagram


def test_make_diagram_sir(sir):
    assert set(sir.flow_fns) == {"Infection", "Recovery"}


def test_make_diagram_foreign_link(sir):
    with pytest.raises(ForeignLink) as exc:
        make_diagram(sir.prim, {"Infection": "0.3*l1*l3", "Recovery": "0.1*l3"})
    assert exc.value.flow == "Infection" and exc.value.link == "l3"


def test_make_diagram_missing_fn(sir):
    with pytest.raises(MissingFlowFn):
        make_diagram(sir.prim, {"Infection": "0.3*l1*l2"})


def test_make_diagram_rejects_time_variable(sir):
    with pytest.raises(ForeignLink):
        make_diagram(sir.prim, {"Infection": "0.3*l1*t", "Recovery": "0.1*l3"})


def test_make_diagram_rejects_invalid_primitive():
    bad = PrimitiveDiagram(stocks=("A", "A"))
    with pytest.raises(DiagramError):
        make_diagram(bad, {})


def test_empty_diagram():
    d = make_diagram(PrimitiveDiagram(), {})
    assert d.stocks == () and d.flows == ()


def test_identity_is_natural_and_flow_valid(sir):
    m = identity_morphism(sir)
    assert check_naturality(m).ok
    report = check_flow_condition(m)
    assert report.ok and report.flows_checked == 2
    assert m.certified == DEFAULT_EQ


def test_naturality_failure_on_down(sir):
    m = identity_morphism(sir)
    m.stock_map["I"] = "S"
    m.stock_map["S"] = "I"
    report = check_naturality(m)
    assert not report.ok
    assert any("down" in v.message for v in report.violations)


def test_morphism_out_of_empty_diagram_ok(sir):
    empty = make_diagram(PrimitiveDiagram(), {})
    m = DiagramMorphism(empty, sir)
    assert check_naturality(m).ok
    assert check_flow_condition(m).flows_checked == 0


def parallel_pair(target_fn):
    """Two parallel flows u, v from A to B merged onto one flow w."""
    x = assemble(
        stocks=["A", "B"],
        flows={"u": "0.05*lu", "v": "0.05*lv"},
        inflows={"u": "B", "v": "B"},
        outflows={"u": "A", "v": "A"},
        links=[("lu", "u", "A"), ("lv", "v", "A")],
    )
    y = assemble(
        stocks=["A", "B"],
        flows={"w": target_fn},
        inflows={"w": "B"},
        outflows={"w": "A"},
        links=[("l3", "w", "A")],
    )
    m = DiagramMorphism(
        x,
        y,
        stock_map={"A": "A", "B": "B"},
        flow_map={"u": "w", "v": "w"},
        inflow_map={"u": "w", "v": "w"},
        outflow_map={"u": "w", "v": "w"},
        link_map={"lu": "l3", "lv": "l3"},
        ctlink_map={"ct:lu": "ct:l3", "ct:lv": "ct:l3"},
    )
    return m


def test_flow_condition_accepts_matching_merge():
    m = parallel_pair("0.1*l3")
    assert check_naturality(m).ok
    assert check_flow_condition(m).ok


def test_flow_condition_rejects_wrong_merge():
    m = parallel_pair("0.11*l3")
    assert check_naturality(m).ok
    report = check_flow_condition(m)
    assert not report.ok
    assert report.violations[0].subject == "w"


def test_disc():
    d = disc(["IC", "HICU", "HNICU"])
    assert d.stocks == ("IC", "HICU", "HNICU")
    assert d.flows == ()
    assert disc([]).stocks == ()


def test_canonical_disc_map(sir):
    m = canonical_disc_map(sir)
    assert m.stock_map == {"S": "S", "I": "I", "R": "R"}
    assert check_naturality(m).ok
    report = check_flow_condition(m)
    assert report.ok and report.flows_checked == 0


def test_compose_preserves_flow_condition(sir):
    m = parallel_pair("0.1*l3")
    n = iso_check(m.tgt, rename_all(m.tgt, "z:"))
    assert n is not None
    comp = compose(m, n)
    assert check_naturality(comp).ok
    assert check_flow_condition(comp).ok


def rename_all(d, prefix):
    from stockflow.schema import CARRIERS, ARROWS
    from stockflow.expr import precompose

    prim = d.prim
    new = {}
    for c in CARRIERS:
        new[c] = tuple(prefix + e for e in prim.carrier(c))
    maps = {}
    for a in ARROWS:
        maps[a] = {prefix + k: prefix + v for k, v in prim.arrow(a).items()}
    p = PrimitiveDiagram(
        stocks=new["stocks"],
        flows=new["flows"],
        inflows=new["inflows"],
        outflows=new["outflows"],
        links=new["links"],
        ctlinks=new["ctlinks"],
        up=maps["up"],
        out=maps["out"],
        down=maps["down"],
        in_=maps["in"],
        st=maps["st"],
        ct=maps["ct"],
        fl=maps["fl"],
    )
    fns = {
        prefix + f: precompose(d.fn(f), {l: prefix + l for l in prim.fl_preimage(f)})
        for f in prim.flows
    }
    return make_diagram(p, fns)


def test_iso_check_identity(sir):
    m = iso_check(sir, sir)
    assert m is not None
    assert m.stock_map == {"S": "S", "I": "I", "R": "R"}


def test_iso_check_renamed(sir):
    other = rename_all(sir, "q:")
    m = iso_check(sir, other)
    assert m is not None
    assert m.stock_map == {"S": "q:S", "I": "q:I", "R": "q:R"}
    back = invert(m)
    assert check_naturality(back).ok
    assert check_flow_condition(back).ok


def test_iso_check_distinguishes_by_carrier_size(sir):
    smaller = assemble(
        stocks=["S", "I", "R"],
        flows={"Infection": "0.3*l1*l2", "Recovery": "0.5"},
        inflows={"Infection": "I", "Recovery": "R"},
        outflows={"Infection": "S", "Recovery": "I"},
        links=[("l1", "Infection", "S"), ("l2", "Infection", "I")],
    )
    assert iso_check(sir, smaller) is None


def test_iso_check_distinguishes_by_function(sir):
    other = rename_all(sir, "")
    other = make_diagram(other.prim, {"Infection": "0.3*l1*l2", "Recovery": "0.2*l3"})
    assert iso_check(sir, other) is None


def test_iso_check_too_large():
    big = disc([f"s{i}" for i in range(25)])
    with pytest.raises(TooLarge):
        iso_check(big, big)
