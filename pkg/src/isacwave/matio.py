"""Plain-text complex matrix files.

Format: UTF-8 text, first line ``rows cols``, then rows*cols whitespace
separated entries written as ``re:im`` pairs in row-major order.  Values are
written with 17 significant digits so a write/read round trip is exact for
float64.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["save_matrix", "load_matrix"]


def save_matrix(path: str | os.PathLike, m: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    rows, cols = m.shape
    lines = [f"{rows} {cols}"]
    for r in range(rows):
        lines.append(" ".join(f"{v.real:.17g}:{v.imag:.17g}" for v in m[r]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"bad header {header!r}")
            rows, cols = int(header[0]), int(header[1])
            tokens = fh.read().split()
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read matrix file {path}: {exc}") from exc
    if len(tokens) != rows * cols:
        raise ValueError(
            f"matrix file {path}: expected {rows * cols} entries, got {len(tokens)}"
        )
    out = np.empty(rows * cols, dtype=complex)
    for i, tok in enumerate(tokens):
        re_str, _, im_str = tok.partition(":")
        if not _:
            raise ValueError(f"matrix file {path}: malformed entry {tok!r}")
        out[i] = complex(float(re_str), float(im_str))
    return out.reshape(rows, cols)
