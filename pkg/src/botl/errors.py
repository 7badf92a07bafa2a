"""Exception hierarchy shared across the toolkit."""


class BotlError(Exception):
    """Base class for all toolkit errors."""


class InvalidPresetError(BotlError):
    """Trajectory preset is degenerate or ill-formed."""


class InvalidInputError(BotlError):
    """Inputs violate a documented precondition."""


class ScenarioFileError(InvalidInputError):
    """Scenario file could not be parsed; message names the offending key."""


class DegenerateGeometryError(BotlError):
    """Geometry makes the requested quantity undefined (e.g. coincident points)."""


class NonIdentifiableError(BotlError):
    """Measurement geometry cannot pin down a position (Assumption 2 violated)."""


class ObservabilityError(BotlError):
    """Scenario fails an observability assumption required before simulation."""


class DegenerateTLSError(BotlError):
    """TLS solution is not unique or lies at infinity."""
