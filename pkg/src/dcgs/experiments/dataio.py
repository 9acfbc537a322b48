"""Plain-text data formats: LIBSVM sparse rows and matrix-completion triplets."""

from __future__ import annotations

import numpy as np
from scipy import sparse


class ParseError(ValueError):
    """Malformed input; the message carries ``path:line``."""


def load_libsvm(path, n_features: int | None = None):
    """Read ``label idx:val idx:val ...`` lines with 1-based indices.

    Returns ``(X, y)`` with ``X`` a CSR matrix. Blank lines and ``#`` comments
    are skipped. ``n_features`` widens the matrix beyond the largest index seen.
    """
    indptr, indices, data, labels = [0], [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad label {tokens[0]!r}") from None
            last = 0
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    j, v = int(idx), float(val)
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: bad feature {tok!r}") from None
                if not sep:
                    raise ParseError(f"{path}:{lineno}: bad feature {tok!r}")
                if j < 1:
                    raise ParseError(f"{path}:{lineno}: index {j} must be >= 1")
                if j <= last:
                    raise ParseError(f"{path}:{lineno}: indices must increase ({j} after {last})")
                last = j
                indices.append(j - 1)
                data.append(v)
            indptr.append(len(indices))
    if not labels:
        raise ParseError(f"{path}: no samples")
    width = max(indices, default=-1) + 1
    if n_features is not None:
        if n_features < width:
            raise ParseError(f"{path}: index {width} exceeds n_features={n_features}")
        width = n_features
    X = sparse.csr_matrix((np.array(data), np.array(indices, dtype=np.int64), np.array(indptr)),
                          shape=(len(labels), width))
    return X, np.array(labels)


def write_libsvm(path, X, y) -> None:
    """Write ``X`` (dense or sparse) and ``y``; explicit zeros are dropped, floats use repr."""
    X = sparse.csr_matrix(X)
    X.eliminate_zeros()
    with open(path, "w") as fh:
        for i, label in enumerate(np.asarray(y, dtype=float)):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            feats = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(X.indices[lo:hi], X.data[lo:hi]))
            fh.write(f"{float(label)!r} {feats}".rstrip() + "\n")


def load_triplets(path):
    """Read ``row col value`` lines (0-based); a ``# shape R C`` header fixes the size.

    Returns ``(triplets, rows, cols)``; without a header the shape is one past
    the largest indices.
    """
    rows = cols = None
    trip = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["shape"] and len(parts) == 3:
                    rows, cols = int(parts[1]), int(parts[2])
                continue
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 'row col value', got {line!r}")
            try:
                a, b, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad triplet {line!r}") from None
            if a < 0 or b < 0:
                raise ParseError(f"{path}:{lineno}: negative index")
            trip.append((a, b, v))
    if not trip:
        raise ParseError(f"{path}: no observations")
    t = np.array(trip, dtype=float)
    rows = int(t[:, 0].max()) + 1 if rows is None else rows
    cols = int(t[:, 1].max()) + 1 if cols is None else cols
    if t[:, 0].max() >= rows or t[:, 1].max() >= cols:
        raise ParseError(f"{path}: entry outside the declared {rows}x{cols} shape")
    return t, rows, cols


def write_triplets(path, triplets, rows: int, cols: int) -> None:
    with open(path, "w") as fh:
        fh.write(f"# shape {rows} {cols}\n")
        for a, b, v in np.asarray(triplets, dtype=float):
            fh.write(f"{int(a)} {int(b)} {float(v)!r}\n")
