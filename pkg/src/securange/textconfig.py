"""Line-oriented structured-text config files.

Format: `[section]` headers followed by `key = value` lines.  Blank
lines and `#` comments are ignored.  Sections may repeat (station
lists use that).  Loaders validate against a per-section schema and
reject unknown keys with a file:line diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class Section:
    name: str
    line: int
    entries: dict = field(default_factory=dict)
    entry_lines: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.entries.get(key, default)


def parse_text_config(text: str, path=None) -> list[Section]:
    """Parse config text into an ordered list of sections."""
    sections: list[Section] = []
    current: Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ConfigError("empty section header", path, lineno)
            current = Section(name=name, line=lineno)
            sections.append(current)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", path, lineno)
        if current is None:
            raise ConfigError("key/value line before any [section] header", path, lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if not key:
            raise ConfigError("empty key", path, lineno)
        if key in current.entries:
            raise ConfigError(f"duplicate key '{key}' in [{current.name}]", path, lineno)
        current.entries[key] = value
        current.entry_lines[key] = lineno
    return sections


def load_text_config(path) -> list[Section]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path) from exc
    return parse_text_config(text, path=path)


def check_keys(section: Section, allowed, required=(), path=None):
    """Reject unknown keys and missing required keys in one section."""
    allowed = set(allowed) | set(required)
    for key in section.entries:
        if key not in allowed:
            raise ConfigError(
                f"unknown key '{key}' in [{section.name}]",
                path,
                section.entry_lines.get(key, section.line),
            )
    for key in required:
        if key not in section.entries:
            raise ConfigError(f"missing required key '{key}' in [{section.name}]", path, section.line)


def check_sections(sections, allowed, path=None):
    for sec in sections:
        if sec.name not in allowed:
            raise ConfigError(f"unknown section [{sec.name}]", path, sec.line)


def one_section(sections, name, path=None, required=True) -> Section | None:
    found = [s for s in sections if s.name == name]
    if not found:
        if required:
            raise ConfigError(f"missing required section [{name}]", path)
        return None
    if len(found) > 1:
        raise ConfigError(f"section [{name}] appears more than once", path, found[1].line)
    return found[0]


def _convert(section, key, conv, kind, path, default):
    if key not in section.entries:
        if default is not None:
            return default
        raise ConfigError(f"missing key '{key}' in [{section.name}]", path, section.line)
    raw = section.entries[key]
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ConfigError(
            f"key '{key}' in [{section.name}]: expected {kind}, got {raw!r}",
            path,
            section.entry_lines.get(key, section.line),
        ) from None


def get_float(section, key, path=None, default=None) -> float:
    return _convert(section, key, float, "a number", path, default)


def get_int(section, key, path=None, default=None) -> int:
    def conv(raw):
        value = float(raw)
        if value != int(value):
            raise ValueError(raw)
        return int(value)

    return _convert(section, key, conv, "an integer", path, default)


def get_str(section, key, path=None, default=None) -> str:
    return _convert(section, key, str, "a string", path, default)


def get_bool(section, key, path=None, default=None) -> bool:
    def conv(raw):
        lowered = raw.strip().lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ValueError(raw)

    return _convert(section, key, conv, "a boolean", path, default)


def get_list(section, key, path=None, default=None) -> list:
    def conv(raw):
        items = [item.strip() for item in raw.split(",")]
        return [item for item in items if item]

    return _convert(section, key, conv, "a comma-separated list", path, default)


def get_float_list(section, key, path=None, default=None) -> list:
    def conv(raw):
        return [float(item.strip()) for item in raw.split(",") if item.strip()]

    return _convert(section, key, conv, "a comma-separated number list", path, default)


def format_text_config(sections) -> str:
    """Render (name, {key: value}) pairs back into config text.

    Values are written with repr-style float formatting so a round trip
    through the parser reproduces identical parsed values.
    """
    lines = []
    for name, entries in sections:
        lines.append(f"[{name}]")
        for key, value in entries.items():
            if isinstance(value, float):
                text = repr(value)
            elif isinstance(value, (list, tuple)):
                text = ", ".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            else:
                text = str(value)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)
