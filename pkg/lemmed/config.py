"""
config.py
key=value configuration files and their merge with command-line overrides
"""

import dataclasses
import enum
import logging
import typing

from .errors import ConfigError

logger = logging.getLogger(__name__)

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}
_NONE = {"", "none", "null"}


def parse_config_lines(lines, source="<config>"):
    """
    Read ``key=value`` lines into a dict of strings.

    Blank lines and lines starting with "#" are skipped; keys and values are
    stripped. A repeated key keeps its last value.
    """
    values = {}
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{number}: expected key=value, got {line!r}")
        values[key.replace("-", "_")] = value.strip()
    return values


def read_config_file(path):
    with open(path, encoding="utf-8") as handle:
        values = parse_config_lines(handle, source=str(path))
    logger.debug("read %d settings from %s", len(values), path)
    return values


def _unwrap_optional(kind):
    if typing.get_origin(kind) is typing.Union:
        args = [arg for arg in typing.get_args(kind) if arg is not type(None)]
        if len(args) == 1:
            return args[0], True
    return kind, False


def coerce(value, kind, key="value"):
    """Convert a config string to `kind` (int, float, bool, str, an Enum, or Optional of one)."""
    if not isinstance(value, str):
        return value
    kind, optional = _unwrap_optional(kind)
    text = value.strip()
    if optional and text.lower() in _NONE:
        return None
    try:
        if kind is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if isinstance(kind, type) and issubclass(kind, enum.Enum):
            return kind(text)
    except ValueError as err:
        raise ConfigError(f"bad value for {key}: {err}") from err
    return text


def field_names(cls):
    return {f.name for f in dataclasses.fields(cls) if f.init}


def check_known_keys(values, classes):
    """Reject keys that are not a field of any of `classes`."""
    known = set().union(*(field_names(cls) for cls in classes))
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")


def build_config(cls, file_values=None, overrides=None):
    """
    Instantiate the dataclass `cls` from defaults, file values and overrides.

    Parameters
    ----------
    cls : dataclass type
    file_values : dict, optional
        Strings from a config file; keys that are not fields of `cls` are
        ignored (check them with `check_known_keys`).
    overrides : dict, optional
        Values from flags, already typed or strings; None means "not given".

    Returns
    -------
    cls instance

    """
    hints = typing.get_type_hints(cls)
    names = field_names(cls)
    kwargs = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key in names and value is not None:
                kwargs[key] = coerce(value, hints[key], key)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid {cls.__name__}: {err}") from err
