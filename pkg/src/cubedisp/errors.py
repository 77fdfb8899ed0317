class ValidationError(ValueError):
    """Bad input data; the message names the offending file, row or value."""


class AttributionError(RuntimeError):
    """A feature's recorded voxels contradict the geometry they should describe."""
