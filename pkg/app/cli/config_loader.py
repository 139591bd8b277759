"""
Run configuration from a key = value file merged with command-line flags.
"""

import io
import logging

from app.models.config_schema import RunConfig
from app.utils.errors import ConfigError

# Setup logging
logger = logging.getLogger(__name__)


def parse_config_text(text):
    """Parse "key = value" lines; '#' starts a comment.

    Raises:
        ConfigError: On a line without '=' or a repeated key (names the line)
    """
    values = {}
    for line_no, line in enumerate(io.StringIO(text), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {stripped!r}")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        values[key] = value.strip()
    return values


def load_config(path=None, overrides=None):
    """Build a RunConfig from an optional file plus flag overrides.

    Flags win over the file; None-valued overrides are ignored.

    Raises:
        ConfigError: If the file cannot be read or parsed
        pydantic.ValidationError: If the merged values are invalid
    """
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                values = parse_config_text(handle.read())
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}")
        logger.info(f"Loaded {len(values)} settings from {path}")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig(**values)
