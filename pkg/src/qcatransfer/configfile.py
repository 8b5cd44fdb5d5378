"""Flat ``key = value`` config files with list values.

Format (schema version 1):

* one ``key = value`` pair per line; blank lines and lines starting with
  ``#`` are ignored, and an inline ``#`` starts a comment
* scalars parse as int, then float, then ``true``/``false``, then as a bare
  string token (no quoting; values cannot contain ``#`` or ``,``)
* a value containing commas parses as a list of scalars
* every file must carry ``schema_version = 1``

Key schemas live with the objects they configure (see ``experiments``);
this module only parses, resolves packaged files, and applies overrides.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed, unknown, or out-of-range configuration input."""


def parse_scalar(token: str):
    token = token.strip()
    if token == "":
        raise ConfigError("empty value")
    low = token.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    return token


def parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        items = [item for item in (part.strip() for part in raw.split(",")) if item != ""]
        if not items:
            raise ConfigError("empty list value")
        return tuple(parse_scalar(item) for item in items)
    return parse_scalar(raw)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    data: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if key in data:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            data[key] = parse_value(value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return data


def read_config_text(path_like) -> tuple[str, str]:
    """Resolve a config reference: filesystem path first, then packaged scenario."""
    path = Path(path_like)
    if path.is_file():
        return path.read_text(encoding="utf-8"), str(path)
    packaged = resources.files(__package__).joinpath("scenarios", path.name)
    if packaged.is_file():
        return packaged.read_text(encoding="utf-8"), f"packaged:{path.name}"
    raise ConfigError(f"config file not found: {path_like}")


def load_config(path_like) -> dict:
    text, source = read_config_text(path_like)
    return parse_config_text(text, source)


def normalize_keys(data: dict, known: set, aliases: dict, source: str = "<config>") -> dict:
    """Apply key aliases and reject anything outside the schema."""
    out: dict = {}
    for key, value in data.items():
        target = aliases.get(key, key)
        if target not in known:
            raise ConfigError(f"{source}: unknown key {key!r}")
        if target in out:
            raise ConfigError(f"{source}: key {target!r} given twice (via alias)")
        out[target] = value
    return out


def check_schema_version(data: dict, source: str = "<config>") -> None:
    version = data.get("schema_version")
    if version is None:
        raise ConfigError(f"{source}: missing required key 'schema_version'")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{source}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"
        )


def apply_overrides(data: dict, overrides, known: set, aliases: dict) -> dict:
    """Merge ``key=value`` strings into parsed config data.

    Only keys belonging to the schema may be overridden; anything else
    fails loudly rather than being silently ignored.
    """
    out = dict(data)
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        target = aliases.get(key, key)
        if target not in known:
            raise ConfigError(f"cannot override unknown key {key!r}")
        try:
            out[target] = parse_value(raw)
        except ConfigError as exc:
            raise ConfigError(f"override {key!r}: {exc}") from None
    return out
