"""Exception types raised across the package."""


class PaceMarketError(Exception):
    """Base class for all package-specific errors."""


class ZeroBudget(PaceMarketError):
    def __init__(self, index: int):
        super().__init__(f"buyer {index} has a non-positive budget")
        self.index = index


class ZeroValuationRow(PaceMarketError):
    def __init__(self, index: int):
        super().__init__(f"buyer {index} has no strictly positive valuation")
        self.index = index


class ZeroSupply(PaceMarketError):
    def __init__(self, detail: str = "supply has non-positive total"):
        super().__init__(detail)


class IndexOutOfRange(PaceMarketError, IndexError):
    pass


class ModeMismatch(PaceMarketError):
    pass


class NoConvergence(PaceMarketError):
    def __init__(self, iterations: int, last_delta: float, detail: str = ""):
        msg = f"solver did not converge after {iterations} iterations (last delta {last_delta:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.iterations = iterations
        self.last_delta = last_delta


class TooLarge(PaceMarketError):
    pass


class PrimalRecoveryFailed(PaceMarketError):
    pass


class ParseError(PaceMarketError, ValueError):
    def __init__(self, message: str, line: int, column: int | None = None):
        loc = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{message} ({loc})")
        self.line = line
        self.column = column


class StreamExhausted(PaceMarketError):
    pass


class AllocationViewMissing(PaceMarketError):
    pass


class LedgerDisabled(PaceMarketError):
    pass


class UndefinedForSingleBuyer(PaceMarketError):
    pass


class ZeroReference(PaceMarketError):
    pass


class BoundaryEquilibrium(PaceMarketError):
    """Some equilibrium multiplier sits on its box boundary; rate constants degenerate."""


class DimensionMismatch(PaceMarketError):
    pass


class RejectionOverflow(PaceMarketError):
    pass
