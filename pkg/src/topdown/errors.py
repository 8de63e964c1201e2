class TopdownError(Exception):
    pass


class BudgetExceeded(TopdownError):
    def __init__(self, what, needed, budget, hint=None):
        self.what = what
        self.needed = needed
        self.budget = budget
        msg = f"{what}: {needed} evaluated items exceeds budget {budget}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)


class EmptyFamily(TopdownError):
    pass


class EmptyPointSet(TopdownError):
    pass


class NotAMember(TopdownError):
    pass


class EmptySphere(TopdownError):
    pass


class DegenerateB(TopdownError):
    """The I'-fiber of the sphere family is empty after the parity fix.

    The partially computed spreadify result is kept on ``self.result``.
    """

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"empty fiber after flipping coordinate {result.i0} "
            f"(|I|={len(result.I)})"
        )


class BadShape(TopdownError):
    pass


class ShapeError(TopdownError):
    pass


class FormatError(TopdownError):
    pass


class ParseError(FormatError):
    def __init__(self, msg, line, col=1):
        self.line = line
        self.col = col
        super().__init__(f"line {line}, col {col}: {msg}")


class AlternationError(FormatError):
    pass


class DanglingChild(FormatError):
    def __init__(self, gate, child):
        self.gate = gate
        self.child = child
        super().__init__(f"gate {gate} references missing child {child}")
