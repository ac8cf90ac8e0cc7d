"""Exception hierarchy. Everything user-facing derives from RemodError."""


class RemodError(Exception):
    pass


class ParseError(RemodError):
    pass


class ValidationError(RemodError):
    pass


class UnknownClass(ValidationError):
    pass


class CyclicModuleGraph(ValidationError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        path = " -> ".join(str(m) for m in self.cycle)
        super().__init__(f"module dependency cycle: {path}")


class EmptyDataset(RemodError):
    pass


class InsufficientData(RemodError):
    pass


class FitDiverged(RemodError):
    pass


class InvalidSpec(RemodError):
    pass


class ScrambleFailed(RemodError):
    pass


class Disconnected(RemodError):
    pass


class BudgetZero(RemodError):
    pass
