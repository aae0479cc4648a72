"""Exception types shared across the package."""

from __future__ import annotations


class StockFlowError(Exception):
    """Base class for all errors raised by this package."""


class DiagramError(StockFlowError):
    """A diagram or one of its components is structurally invalid."""


class UnknownStock(DiagramError):
    def __init__(self, stock: str, context: str = ""):
        self.stock = stock
        suffix = f" ({context})" if context else ""
        super().__init__(f"unknown stock {stock!r}{suffix}")


class UnknownFlow(DiagramError):
    def __init__(self, flow: str, context: str = ""):
        self.flow = flow
        suffix = f" ({context})" if context else ""
        super().__init__(f"unknown flow {flow!r}{suffix}")


class MissingFlowFn(DiagramError):
    def __init__(self, flow: str):
        self.flow = flow
        super().__init__(f"no flow function supplied for flow {flow!r}")


class ForeignLink(DiagramError):
    """An expression references a link outside the flow's own link set."""

    def __init__(self, flow: str, link: str):
        self.flow = flow
        self.link = link
        super().__init__(f"flow {flow!r}: expression references link {link!r} outside its link set")


class NonLocalLink(DiagramError):
    """A link's source stock has no flow incidence adjacent to the link's flow.

    Such links are representable and simulable, but the corolla of the source
    stock is not well defined, so decomposition-based operations reject them.
    """

    def __init__(self, ctlink: str, stock: str, flow: str):
        self.ctlink = ctlink
        self.stock = stock
        self.flow = flow
        super().__init__(
            f"ctlink {ctlink!r} at stock {stock!r} targets a link of flow {flow!r}, "
            f"which has no incidence at that stock; corolla extraction is undefined"
        )


class MorphismError(StockFlowError):
    """A morphism's component maps are unusable (not merely failing a check)."""


class TooLarge(StockFlowError):
    def __init__(self, carrier: str, size: int, bound: int):
        super().__init__(f"carrier {carrier!r} has {size} elements, isomorphism search bound is {bound}")


class InvalidPushout(StockFlowError):
    """The presheaf pushout left the category of diagrams (an injectivity
    constraint on in/out/ct broke), so no diagram with this gluing exists."""


class InconsistentFlowFns(StockFlowError):
    def __init__(self, flow: str, deviation: float):
        self.flow = flow
        self.deviation = deviation
        super().__init__(
            f"candidate flow functions for glued flow {flow!r} disagree (max deviation {deviation:.3g})"
        )


class SumMismatch(StockFlowError):
    def __init__(self, flow: str, deviation: float):
        self.flow = flow
        self.deviation = deviation
        super().__init__(
            f"split parts of flow {flow!r} do not sum to the original function (max deviation {deviation:.3g})"
        )


class DuplicateFlowId(DiagramError):
    def __init__(self, flow: str):
        self.flow = flow
        super().__init__(f"flow id {flow!r} already exists")


class IncompleteAttachment(StockFlowError):
    def __init__(self, missing: list[str]):
        self.missing = list(missing)
        super().__init__("attachment leaves elements unassigned: " + ", ".join(self.missing))


class NotHalfOutflow(StockFlowError):
    def __init__(self, flow: str, reason: str):
        self.flow = flow
        super().__init__(f"flow {flow!r} is not a half outflow: {reason}")


class PipelineError(StockFlowError):
    def __init__(self, step: int, op: str, cause: Exception):
        self.step = step
        self.op = op
        self.cause = cause
        super().__init__(f"step {step} ({op}): {cause}")


class SimulationError(StockFlowError):
    """Simulation configuration or evaluation failure."""


class ExprError(StockFlowError):
    """Base class for expression language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, offset: int, expected: tuple[str, ...], found: str):
        self.offset = offset
        self.expected = expected
        self.found = found
        super().__init__(f"syntax error at offset {offset}: expected {', '.join(expected)}, found {found}")


class MissingVariable(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no value bound for variable {name!r}")


class DivisionByZero(ExprError):
    def __init__(self) -> None:
        super().__init__("division by zero")


class MissingRename(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"rename map has no entry for link {name!r}")


class EmptySum(ExprError):
    def __init__(self) -> None:
        super().__init__("cannot sum an empty list of expressions")


class FileFormatError(StockFlowError):
    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


class ScriptError(StockFlowError):
    """A composition script step is malformed."""
