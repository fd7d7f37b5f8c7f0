"""Exception hierarchy shared by the engine, model loader, codec and monitor."""


class DcrError(Exception):
    """Base class for all errors raised by dcrmon."""


class DcrSyntaxError(DcrError, ValueError):
    """Malformed expression, duration or model text."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class SchemaError(DcrError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class UnknownEvent(DcrError, KeyError):
    def __init__(self, event):
        self.event = event
        super().__init__(event)

    def __str__(self):
        return f"unknown event {self.event!r}"


class UnknownRole(DcrError, KeyError):
    def __init__(self, role):
        self.role = role
        super().__init__(role)

    def __str__(self):
        return f"unknown role {self.role!r}"


class UnknownGroup(DcrError, KeyError):
    def __init__(self, group):
        self.group = group
        super().__init__(group)

    def __str__(self):
        return f"unknown group or event {self.group!r}"


class CyclicNesting(DcrError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cyclic group nesting: " + " -> ".join(self.cycle))


class NotEnabled(DcrError):
    def __init__(self, event, verdict):
        self.event = event
        self.verdict = verdict
        reasons = ", ".join(str(b) for b in verdict.blockers)
        super().__init__(f"{event} is not enabled: {reasons}")


class MissingInput(DcrError):
    pass


class UnexpectedInput(DcrError):
    pass


class ExpressionError(DcrError):
    """Evaluation of an expression failed."""


class UndefinedValue(ExpressionError):
    def __init__(self, event):
        self.event = event
        super().__init__(f"value of {event!r} is undefined")


class TypeMismatch(ExpressionError, TypeError):
    pass


class DivisionByZero(ExpressionError, ZeroDivisionError):
    pass


class DeadlineViolation(DcrError):
    def __init__(self, events):
        self.events = sorted(events)
        super().__init__("time would pass the deadline of: " + ", ".join(self.events))


class AbiError(DcrError, ValueError):
    pass


class SelectorMismatch(AbiError):
    pass


class LengthMismatch(AbiError):
    pass


class MalformedWord(AbiError):
    pass


class UnsupportedType(AbiError):
    pass


class TraceError(DcrError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class TraceParseError(TraceError, ValueError):
    pass


class OrderingError(TraceError):
    pass


class ConfigError(DcrError, ValueError):
    """Mapping config is malformed or does not fit the model."""
