"""Matrix Market coordinate-format input."""

from __future__ import annotations

import scipy.io

from ..linalg import as_sparse_rows

FIELDS = ("real", "integer", "pattern")
SYMMETRIES = ("general", "symmetric")


class MatrixMarketError(ValueError):
    pass


def read_header(path):
    """Return ``(field, symmetry)`` after validating the banner line."""
    with open(path, encoding="utf-8") as fh:
        banner = fh.readline().strip()
    tokens = banner.split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(f"{path}: missing %%MatrixMarket banner")
    obj, fmt, field, sym = (t.lower() for t in tokens[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"{path}: only 'matrix coordinate' files are supported")
    if field not in FIELDS:
        raise MatrixMarketError(f"{path}: unsupported field {field!r}")
    if sym not in SYMMETRIES:
        raise MatrixMarketError(f"{path}: unsupported symmetry {sym!r}")
    return field, sym


def read_matrix_market(path):
    """Load a coordinate Matrix Market file as canonical CSR.

    Pattern entries become 1.0, symmetric files are mirrored and duplicate
    entries are summed.
    """
    read_header(path)
    try:
        M = scipy.io.mmread(path)
    except (ValueError, IndexError) as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    return as_sparse_rows(M)


def write_matrix_market(path, A, comment=""):
    scipy.io.mmwrite(path, as_sparse_rows(A), comment=comment, field="real", symmetry="general")


__all__ = ["MatrixMarketError", "read_header", "read_matrix_market", "write_matrix_market"]
