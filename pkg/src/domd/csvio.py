"""CSV helpers shared by the trace, path and report writers.

All files use a header row, comma separators, LF newlines and floats
rendered with 17 significant digits so that identical inputs produce
byte-identical output.
"""

import numpy as np


def fmt(value):
    """Render one cell. Floats get 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header, rows, comments=()):
    """Write rows of cells to path.

    comments are emitted first, one per line, prefixed with '# '.
    """
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write("# " + line + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_csv(path):
    """Read a CSV written by write_csv. Returns (comments, header, rows of str)."""
    comments, header, rows = [], None, []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    return comments, header, rows
