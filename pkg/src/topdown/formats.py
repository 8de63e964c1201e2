"""Plain-text file formats for point sets and families, plus JSON helpers."""

import json
import re

from .bits import coords_of, mask_of, point_to_str, str_to_point
from .errors import FormatError
from .family import SetFamily
from .pointset import PointSet

_PS_HEADER = re.compile(r"pointset\s+n=(\d+)\s*$")
_FAM_HEADER = re.compile(r"family\s+n=(\d+)\s*$")


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def dumps_pointset(X):
    return "\n".join([f"pointset n={X.n}"] + X.strings()) + "\n"


def loads_pointset(text):
    lines = _content_lines(text)
    first = next(lines, None)
    m = _PS_HEADER.match(first[1]) if first else None
    if not m:
        raise FormatError("expected header 'pointset n=<n>'")
    n = int(m.group(1))
    seen = set()
    for lineno, s in lines:
        if len(s) != n or set(s) - {"0", "1"}:
            raise FormatError(f"line {lineno}: {s!r} is not a {n}-bit 0/1 string")
        x = str_to_point(s)
        if x in seen:
            raise FormatError(f"line {lineno}: duplicate point {s}")
        seen.add(x)
    return PointSet.from_members(n, sorted(seen))


def dumps_family(A):
    rows = [",".join(str(c) for c in coords_of(int(m))) or "-" for m in A.masks]
    return "\n".join([f"family n={A.n}"] + rows) + "\n"


def loads_family(text):
    lines = _content_lines(text)
    first = next(lines, None)
    m = _FAM_HEADER.match(first[1]) if first else None
    if not m:
        raise FormatError("expected header 'family n=<n>'")
    n = int(m.group(1))
    masks = []
    for lineno, s in lines:
        if s == "-":
            masks.append(0)
            continue
        try:
            coords = [int(t) for t in s.split(",")]
        except ValueError:
            raise FormatError(f"line {lineno}: bad coordinate list {s!r}") from None
        if any(not 1 <= c <= n for c in coords):
            raise FormatError(f"line {lineno}: coordinate outside 1..{n}")
        masks.append(mask_of(coords))
    return SetFamily(n, masks)


def _read(path):
    with open(path) as fh:
        return fh.read()


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def load_pointset(path):
    return loads_pointset(_read(path))


def dump_pointset(X, path):
    _write(path, dumps_pointset(X))


def load_family(path):
    return loads_family(_read(path))


def dump_family(A, path):
    _write(path, dumps_family(A))


def to_jsonable(obj):
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if isinstance(obj, PointSet):
        return {"n": obj.n, "members": obj.strings()}
    if isinstance(obj, SetFamily):
        return {"n": obj.n, "sets": [list(s) for s in obj.sets()]}
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj):
    """Deterministic JSON: insertion key order, fixed separators, trailing newline."""
    return json.dumps(obj, indent=2, default=to_jsonable, allow_nan=False) + "\n"


def point_strings(points, n):
    return [point_to_str(int(x), n) for x in points]
