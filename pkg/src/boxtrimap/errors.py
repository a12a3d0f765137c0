"""Exception hierarchy shared by all pipeline stages."""


class BoxTrimapError(Exception):
    """Base class for every error raised by this package."""


class AnnotationError(BoxTrimapError):
    """Annotation file cannot be parsed or violates the schema.

    ``line`` and ``column`` are set for JSON syntax errors, ``field`` when a
    required field is missing or malformed, ``ids`` for dangling references.
    """

    def __init__(self, message, *, path=None, line=None, column=None, field=None, ids=()):
        super().__init__(message)
        self.path = path
        self.line = line
        self.column = column
        self.field = field
        self.ids = tuple(ids)


class BoxOutsideImage(BoxTrimapError):
    pass


class CorruptMask(BoxTrimapError):
    pass


class CorruptProbMap(BoxTrimapError):
    pass


class MissingProbMap(BoxTrimapError):
    pass


class ShapeMismatch(BoxTrimapError):
    pass


class EmptyCorpus(BoxTrimapError):
    pass


class FontError(BoxTrimapError):
    pass


class GenerationExhausted(BoxTrimapError):
    pass


class ConfigError(BoxTrimapError):
    """Invalid configuration value; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
