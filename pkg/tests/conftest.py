import pytest

from stockflow.diagram import assemble


@pytest.fixture
def sir():
    """Three stocks, two closed flows, three sourced links."""
    return assemble(
        stocks=["S", "I", "R"],
        flows={"Infection": "0.3*l1*l2", "Recovery": "0.1*l3"},
        inflows={"Infection": "I", "Recovery": "R"},
        outflows={"Infection": "S", "Recovery": "I"},
        links=[("l1", "Infection", "S"), ("l2", "Infection", "I"), ("l3", "Recovery", "I")],
    )


@pytest.fixture
def hospital():
    """A closed three-stock refinement used by the substitution tests."""
    return assemble(
        stocks=["IC", "HICU", "HNICU"],
        flows={"AdmitICU": "0.05*y1", "AdmitNonICU": "0.12*y2", "StepDown": "0.08*y3"},
        inflows={"AdmitICU": "HICU", "AdmitNonICU": "HNICU", "StepDown": "HNICU"},
        outflows={"AdmitICU": "IC", "AdmitNonICU": "IC", "StepDown": "HICU"},
        links=[("y1", "AdmitICU", "IC"), ("y2", "AdmitNonICU", "IC"), ("y3", "StepDown", "HICU")],
    )
