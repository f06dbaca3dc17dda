"""Exception hierarchy shared by every module."""


class IsoMirrorError(Exception):
    """Base class for all errors raised by the package."""


class ParseError(IsoMirrorError):
    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


class DuplicateEdgeError(ParseError):
    pass


class DomainError(IsoMirrorError, ValueError):
    """An argument is outside the domain of the operation."""


class DegenerateInputError(IsoMirrorError):
    """Preprocessing left nothing to work with."""


class RankDeficiencyError(IsoMirrorError):
    def __init__(self, available, requested, day=None):
        self.available = available
        self.requested = requested
        self.day = day
        where = "" if day is None else f" (day {day})"
        super().__init__(
            f"only {available} positive eigenvalue(s) available, {requested} requested{where}"
        )


class ConnectivityError(IsoMirrorError):
    def __init__(self, n_components, k):
        self.n_components = n_components
        self.k = k
        super().__init__(
            f"symmetric {k}-NN graph has {n_components} connected components; increase k"
        )


class InsufficientDataError(IsoMirrorError):
    def __init__(self, have, need):
        self.have = have
        self.need = need
        super().__init__(f"need at least {need} observations, got {have}")


class SpecValidationError(IsoMirrorError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
