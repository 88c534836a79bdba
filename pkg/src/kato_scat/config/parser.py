# src/kato_scat/config/parser.py

import logging
from pathlib import Path

from kato_scat.config.patterns import (
    INLINE_COMMENT_PATTERN,
    INTERVAL_PATTERN,
    KEY_VALUE_PATTERN,
    LIST_SEPARATOR_PATTERN,
    SECTION_PATTERN,
    SKIP_PATTERN,
)
from kato_scat.errors import ConfigError


class ConfigParser:
    """
    Reads the flat `key = value` run files:

        [potential]
        family = step
        v0 = -3      # well depth
        [grid]
        n = 2000

    Values stay strings; the pydantic models convert them.
    """

    def _clean_value(self, value: str) -> str:
        value = INLINE_COMMENT_PATTERN.sub("", value).strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        return value

    def parse_text(self, text: str, source: str = "<string>") -> dict:
        sections: dict = {}
        current = None
        for number, line in enumerate(text.splitlines(), start=1):
            if SKIP_PATTERN.match(line):
                continue
            header = SECTION_PATTERN.match(line)
            if header:
                current = header.group("name").lower()
                sections.setdefault(current, {})
                continue
            pair = KEY_VALUE_PATTERN.match(line)
            if not pair:
                raise ConfigError(f"{source}:{number}: cannot parse '{line.strip()}'")
            if current is None:
                raise ConfigError(f"{source}:{number}: key '{pair.group('key')}' appears before any [section]")
            key = pair.group("key").lower().replace("-", "_")
            sections[current][key] = self._clean_value(pair.group("value"))
        logging.debug(f"Parsed {source}: sections {sorted(sections)}")
        return sections

    def parse_file(self, path) -> dict:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return self.parse_text(path.read_text(encoding="utf-8"), str(path))


def split_list(value: str) -> list:
    return [item for item in LIST_SEPARATOR_PATTERN.split(value.strip()) if item]


def parse_intervals(value: str) -> list:
    """'0:1:-3, 1:2:0.5:0.1' -> [(0, 1, -3, 0), (1, 2, 0.5, 0.1)]."""
    intervals = []
    for match in INTERVAL_PATTERN.finditer(value):
        data = match.groupdict()
        try:
            intervals.append((float(data["x0"]), float(data["x1"]), float(data["re"]), float(data["im"] or 0.0)))
        except ValueError as error:
            raise ConfigError(f"bad stack interval '{match.group(0)}': {error}") from error
    if value.strip() and not intervals:
        raise ConfigError(f"no stack intervals found in '{value}'")
    return intervals
