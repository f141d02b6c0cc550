"""
Engine errors.

Checking entry points (wf_lang, check_term, discharge, ...) turn these into
report diagnostics; everything below them raises.
"""


class GatError(Exception):
    """Base class for every engine error."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.message = message
        self.location = location

    def __str__(self):
        if self.location:
            return f"{self.location}: {self.message}"
        return self.message


# --- Kernel ---

class DuplicateName(GatError):
    def __init__(self, name: str, location: str | None = None):
        super().__init__(f"duplicate name '{name}'", location)
        self.name = name


# --- Checking ---

class UnknownHead(GatError):
    def __init__(self, head: str, location: str | None = None):
        super().__init__(f"unknown constructor '{head}'", location)
        self.head = head


class ArityMismatch(GatError):
    def __init__(self, head: str, expected: int, got: int, location: str | None = None):
        super().__init__(f"'{head}' expects {expected} arguments, got {got}", location)
        self.head = head
        self.expected = expected
        self.got = got


class SortMismatch(GatError):
    def __init__(self, expected, got, location: str | None = None):
        super().__init__(f"expected sort {expected}, got {got}", location)
        self.expected = expected
        self.got = got


class UnsolvedImplicit(GatError):
    def __init__(self, names, location: str | None = None):
        names = tuple(names)
        super().__init__(f"could not infer implicit arguments: {', '.join(names)}", location)
        self.names = names


# --- Proofs ---

class UnknownRule(GatError):
    def __init__(self, name: str, location: str | None = None):
        super().__init__(f"no equation named '{name}'", location)
        self.name = name


class BadAxiomInstance(GatError):
    pass


class EndpointMismatch(GatError):
    pass


class IllTypedRefl(GatError):
    pass


# --- Rewriting ---

class FuelExhausted(GatError):
    """Raised with the partial RewriteResult reached before fuel ran out."""

    def __init__(self, result, location: str | None = None):
        super().__init__(f"fuel exhausted after {result.steps_used} steps", location)
        self.result = result


# --- Compilers ---

class MissingCase(GatError):
    def __init__(self, head: str, location: str | None = None):
        super().__init__(f"compiler has no case for '{head}'", location)
        self.head = head


class DuplicateCase(GatError):
    def __init__(self, name: str, location: str | None = None):
        super().__init__(f"compiler case '{name}' defined twice", location)
        self.name = name


class NotASubset(GatError):
    pass


# --- Generators ---

class NotASubstLanguage(GatError):
    pass


class BadSpec(GatError):
    pass


class ChecksFailed(GatError):
    def __init__(self, diagnostics, location: str | None = None):
        diagnostics = list(diagnostics)
        summary = "; ".join(f"{loc}: {msg}" for loc, msg in diagnostics[:3])
        super().__init__(f"parameterization checks failed ({summary})", location)
        self.diagnostics = diagnostics


# --- Demos ---

class Stuck(GatError):
    pass


# --- Surface syntax ---

class DslSyntaxError(GatError):
    def __init__(self, message: str, line: int = 0, column: int = 0, path: str | None = None):
        where = f"{path or '<input>'}:{line}:{column}"
        super().__init__(message, where)
        self.line = line
        self.column = column


class UnknownDeclaration(GatError):
    def __init__(self, name: str, kind: str = "declaration", location: str | None = None):
        super().__init__(f"unknown {kind} '{name}'", location)
        self.name = name
        self.kind = kind
