"""Plain-text formats used by the experiment tooling.

Two formats live here:

* dense matrices: a header line ``rows cols`` followed by one line per
  row with space-separated decimal values, row major;
* flat config files: ``key=value`` lines, ``#`` comments and blank
  lines ignored.

Floats are printed with 17 significant digits so a write/read round
trip reproduces IEEE doubles bit for bit.
"""

import numpy as np

from .errors import UsageError

FLOAT_FMT = "%.17g"


def format_float(x):
    return FLOAT_FMT % float(x)


def write_dense_matrix(path, mat):
    """Write a 2-d array as decimal text with a ``rows cols`` header."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w") as fh:
        fh.write("%d %d\n" % mat.shape)
        for row in mat:
            fh.write(" ".join(FLOAT_FMT % v for v in row))
            fh.write("\n")


def read_dense_matrix(path):
    """Read a matrix written by :func:`write_dense_matrix`."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise UsageError(f"{path}: expected 'rows cols' header")
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError as exc:
            raise UsageError(f"{path}: bad header {header!r}") from exc
        out = np.empty((rows, cols))
        for i in range(rows):
            parts = fh.readline().split()
            if len(parts) != cols:
                raise UsageError(f"{path}: row {i} has {len(parts)} values, expected {cols}")
            out[i] = [float(v) for v in parts]
    return out


def write_config(path, items):
    """Write a flat key=value config file; values stringified plainly."""
    with open(path, "w") as fh:
        for key, value in items:
            if value is None:
                continue
            fh.write(f"{key}={_format_value(value)}\n")


def _format_value(value):
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def read_config(path):
    """Read a flat key=value file into an ordered dict of strings."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out
