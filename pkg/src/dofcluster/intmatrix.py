"""Dense matrices with exact integer entries.

Rank and determinant computations elsewhere in the package assume entries
are exact Python ints (arbitrary precision), so no floating-point value is
ever accepted here.  Empty matrices (0 rows and/or 0 columns) are legal.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence

import numpy as np


def _as_int(value) -> int:
    if isinstance(value, bool):
        raise TypeError("matrix entries must be integers, got bool")
    if isinstance(value, (int, np.integer)):
        return int(value)
    raise TypeError(f"matrix entries must be integers, got {type(value).__name__}")


class IntMatrix:
    """Immutable row-major matrix of exact integers."""

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, data: Iterable[Sequence[int]], cols: int | None = None):
        rows = tuple(tuple(_as_int(x) for x in row) for row in data)
        if rows:
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise ValueError("rows have unequal lengths")
        else:
            width = 0 if cols is None else cols
        if cols is not None and rows and width != cols:
            raise ValueError(f"expected {cols} columns, got {width}")
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", width)
        object.__setattr__(self, "_data", rows)

    def __setattr__(self, name, value):
        raise AttributeError("IntMatrix is immutable")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls([[0] * cols for _ in range(rows)], cols=cols)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, entries: Sequence[int]) -> "IntMatrix":
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return self._data[i][j]

    def row(self, i: int) -> tuple[int, ...]:
        return self._data[i]

    def column(self, j: int) -> tuple[int, ...]:
        return tuple(r[j] for r in self._data)

    def tolists(self) -> list[list[int]]:
        return [list(r) for r in self._data]

    def to_float(self) -> np.ndarray:
        return np.array(self._data, dtype=float).reshape(self.rows, self.cols)

    def transpose(self) -> "IntMatrix":
        return IntMatrix(
            [[self._data[i][j] for i in range(self.rows)] for j in range(self.cols)],
            cols=self.rows,
        )

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> "IntMatrix":
        return IntMatrix(
            [[self._data[i][j] for j in col_idx] for i in row_idx],
            cols=len(col_idx),
        )

    def row_sums(self) -> tuple[int, ...]:
        return tuple(sum(r) for r in self._data)

    def is_symmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        return all(
            self._data[i][j] == self._data[j][i]
            for i in range(self.rows)
            for j in range(i + 1, self.cols)
        )

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        if not isinstance(other, IntMatrix):
            return NotImplemented
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")
        return IntMatrix(
            [
                [a + b for a, b in zip(ra, rb)]
                for ra, rb in zip(self._data, other._data)
            ],
            cols=self.cols,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self) -> int:
        return hash((self.shape, self._data))

    def __repr__(self) -> str:
        if self.rows * self.cols <= 36:
            body = ", ".join(str(list(r)) for r in self._data)
            return f"IntMatrix([{body}])"
        return f"IntMatrix(<{self.rows}x{self.cols}>)"
