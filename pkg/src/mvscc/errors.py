"""Exception types shared across the package."""


class FormatError(ValueError):
    """Malformed input data (raw video, reports, bitstreams)."""


class BitstreamError(FormatError):
    """An MVSC stream could not be parsed."""

    def __init__(self, message: str, frame: int | None = None, tile: int | None = None):
        where = []
        if frame is not None:
            where.append(f"frame {frame}")
        if tile is not None:
            where.append(f"tile {tile}")
        prefix = f"{' '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.frame = frame
        self.tile = tile
        self.partial = None


class ConfigError(ValueError):
    """Inconsistent codec or harness configuration."""
