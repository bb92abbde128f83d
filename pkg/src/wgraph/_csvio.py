"""Shared CSV plumbing: number formatting, parsing and atomic writes."""

import csv
import io
import math
import os
import tempfile

# 12 significant digits; documented precision of every file the package writes.
SIG_DIGITS = 12
INF_TOKEN = "inf"


def fmt(x):
    x = float(x)
    if math.isinf(x):
        return INF_TOKEN if x > 0 else "-" + INF_TOKEN
    if x == 0.0:
        return "0"
    return format(x, f".{SIG_DIGITS}g")


def parse_number(token, where):
    """Parse a nonnegative decimal or the ``inf`` sentinel.

    ``where`` is a human-readable position used in the error message.
    """
    tok = token.strip()
    if tok.lower() == INF_TOKEN:
        return math.inf
    try:
        val = float(tok)
    except ValueError:
        raise ValueError(f"unparsable numeric field {token!r} at {where}") from None
    if math.isnan(val):
        raise ValueError(f"unparsable numeric field {token!r} at {where}")
    return val


def read_rows(source):
    """Return CSV rows from a path, a text stream or a string of CSV text.

    Blank lines and lines starting with ``#`` are skipped; the comment lines
    are returned separately.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, os.PathLike) or (
        isinstance(source, str) and "\n" not in source and os.path.exists(source)
    ):
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        text = source
    if text.startswith("\ufeff"):
        text = text[1:]
    comments, body = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            comments.append(line.lstrip()[1:].strip())
        else:
            body.append(line)
    return comments, list(csv.reader(body))


def to_csv_text(rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
