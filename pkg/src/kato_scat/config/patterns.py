# src/kato_scat/config/patterns.py

import re

# "[section]" header on its own line.
SECTION_PATTERN = re.compile(
    r"""
    ^\s*\[
    (?P<name>[a-z][a-z0-9_]*)     # section name, lower case
    \]\s*$
    """,
    re.VERBOSE | re.IGNORECASE,
)

# "key = value"; the value keeps inner spaces but not the surrounding ones.
KEY_VALUE_PATTERN = re.compile(
    r"""
    ^\s*
    (?P<key>[a-z][a-z0-9_\-]*)    # key; dashes are folded to underscores by the parser
    \s*=\s*
    (?P<value>.*?)                # raw value, non-greedy
    \s*$
    """,
    re.VERBOSE | re.IGNORECASE,
)

# Blank lines and full-line comments.
SKIP_PATTERN = re.compile(r"^\s*(?:[#;].*)?$")

# Trailing "# comment" after a value.
INLINE_COMMENT_PATTERN = re.compile(r"\s+#.*$")

# One stack interval "x0:x1:re:im" (the imaginary part is optional).
INTERVAL_PATTERN = re.compile(
    r"""
    (?P<x0>[-+]?[\d.eE+\-]+)\s*:\s*
    (?P<x1>[-+]?[\d.eE+\-]+)\s*:\s*
    (?P<re>[-+]?[\d.eE+\-]+)
    (?:\s*:\s*(?P<im>[-+]?[\d.eE+\-]+))?
    """,
    re.VERBOSE,
)

# Separator for list values: commas and/or whitespace.
LIST_SEPARATOR_PATTERN = re.compile(r"[,\s]+")
