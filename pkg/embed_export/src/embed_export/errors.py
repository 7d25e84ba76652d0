class ExportError(Exception):
    """Base class for exporter failures."""


class ConfigError(ExportError):
    """Bad job configuration: unknown backbone, bad template, bad batch size."""


class ManifestError(ExportError):
    """Manifest file cannot be parsed or violates its field contract."""


class ImageError(ExportError):
    """An image file is missing or not a readable binary PNM."""
