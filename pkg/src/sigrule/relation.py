"""Binary relations stored column-wise as bitsets.

Each attribute column is a Python ``int`` whose bit ``t`` is set when row ``t``
holds the value 1.  Conjunctive supports are then a chain of ``&`` followed by
``int.bit_count``, which is all the measures in this package ever need.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np


class LoadError(ValueError):
    """Raised when a dataset cannot be parsed into a binary relation."""


@dataclass(frozen=True, order=True)
class AttributeId:
    index: int
    name: str = field(compare=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Literal:
    """An attribute-value assignment ``A=1`` or ``A=0``."""

    attr: AttributeId
    value: bool = True

    def negate(self) -> Literal:
        return Literal(self.attr, not self.value)

    @property
    def sort_key(self) -> tuple[int, int]:
        # positive literal sorts before the negated one of the same attribute
        return (self.attr.index, 0 if self.value else 1)

    def __str__(self) -> str:
        return self.attr.name if self.value else "!" + self.attr.name


@dataclass(frozen=True)
class Event:
    """A conjunction of literals over distinct attributes.

    The empty event is the always-true assignment.
    """

    literals: frozenset[Literal] = frozenset()

    def __post_init__(self) -> None:
        if not isinstance(self.literals, frozenset):
            object.__setattr__(self, "literals", frozenset(self.literals))
        seen = set()
        for lit in self.literals:
            if lit.attr.index in seen:
                raise ValueError(f"attribute {lit.attr.name!r} appears twice in event")
            seen.add(lit.attr.index)

    @classmethod
    def of(cls, *literals: Literal) -> Event:
        return cls(frozenset(literals))

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self):
        return iter(self.ordered())

    def __or__(self, other: Event) -> Event:
        return Event(self.literals | other.literals)

    def __sub__(self, other: Event) -> Event:
        return Event(self.literals - other.literals)

    def issubset(self, other: Event) -> bool:
        return self.literals <= other.literals

    def ordered(self) -> list[Literal]:
        return sorted(self.literals, key=lambda lit: lit.sort_key)

    @property
    def sort_key(self) -> tuple[tuple[int, int], ...]:
        return tuple(lit.sort_key for lit in self.ordered())

    @property
    def attr_indices(self) -> frozenset[int]:
        return frozenset(lit.attr.index for lit in self.literals)

    def disjoint(self, other: Event) -> bool:
        return not (self.attr_indices & other.attr_indices)

    def __str__(self) -> str:
        return ",".join(str(lit) for lit in self.ordered())


EMPTY = Event()


class Relation:
    """An immutable ``n``-row binary relation over ``k`` named attributes."""

    def __init__(self, names: Sequence[str], columns: Sequence[int], n: int):
        if n < 1:
            raise LoadError("relation has no rows")
        if len(names) < 1:
            raise LoadError("relation has no attributes")
        if len(names) != len(columns):
            raise ValueError("names and columns differ in length")
        if len(set(names)) != len(names):
            raise LoadError("duplicate attribute names")
        self._n = n
        self._all = (1 << n) - 1
        self._names = tuple(names)
        self._columns = tuple(int(c) & self._all for c in columns)
        self._attrs = tuple(AttributeId(i, name) for i, name in enumerate(self._names))
        self._by_name = {a.name: a for a in self._attrs}

    @classmethod
    def from_matrix(cls, matrix, names: Sequence[str] | None = None) -> Relation:
        arr = np.asarray(matrix)
        if arr.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        n, k = arr.shape
        if names is None:
            names = [f"A{i + 1}" for i in range(k)]
        if not np.isin(arr, (0, 1)).all():
            raise LoadError("matrix is not binary")
        bits = arr.astype(bool)
        columns = [
            int.from_bytes(np.packbits(bits[:, j], bitorder="little").tobytes(), "little")
            for j in range(k)
        ]
        return cls(list(names), columns, n)

    @property
    def n(self) -> int:
        return self._n

    @property
    def k(self) -> int:
        return len(self._names)

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def attributes(self) -> tuple[AttributeId, ...]:
        return self._attrs

    @property
    def columns(self) -> tuple[int, ...]:
        return self._columns

    def attribute(self, name: str) -> AttributeId:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown attribute {name!r}") from None

    def literal(self, spec: str) -> Literal:
        """Parse ``name`` or ``!name`` into a literal of this relation."""
        spec = spec.strip()
        if spec.startswith("!"):
            return Literal(self.attribute(spec[1:].strip()), False)
        return Literal(self.attribute(spec), True)

    def event(self, spec: str | Iterable[str]) -> Event:
        """Parse a comma-separated literal list, e.g. ``"a,!b"``."""
        if isinstance(spec, str):
            parts = [p for p in spec.split(",") if p.strip()]
        else:
            parts = list(spec)
        return Event(frozenset(self.literal(p) for p in parts))

    def _check(self, lit: Literal) -> None:
        idx = lit.attr.index
        if not (0 <= idx < self.k) or self._attrs[idx] != lit.attr or self._names[idx] != lit.attr.name:
            raise KeyError(f"literal {lit} does not belong to this relation")

    def literal_mask(self, lit: Literal) -> int:
        self._check(lit)
        col = self._columns[lit.attr.index]
        return col if lit.value else col ^ self._all

    def mask(self, event: Event) -> int:
        """Bitset of the rows satisfying every literal of ``event``."""
        m = self._all
        for lit in event.literals:
            m &= self.literal_mask(lit)
        return m

    def support(self, event: Event) -> int:
        return self.mask(event).bit_count()

    def probability(self, event: Event) -> float:
        return self.support(event) / self._n

    def to_matrix(self) -> np.ndarray:
        out = np.zeros((self._n, self.k), dtype=np.uint8)
        nbytes = (self._n + 7) // 8
        for j, col in enumerate(self._columns):
            raw = np.frombuffer(col.to_bytes(nbytes, "little"), dtype=np.uint8)
            out[:, j] = np.unpackbits(raw, bitorder="little")[: self._n]
        return out

    def __repr__(self) -> str:
        return f"Relation(n={self._n}, k={self.k})"


def _read_text(source: IO[bytes] | IO[str] | bytes | str) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_transactions(source: IO[bytes] | IO[str] | bytes | str) -> Relation:
    """Read whitespace-separated item lists, one transaction per line.

    Blank lines are skipped. Attributes are the observed tokens in
    lexicographic order; a token repeated on a line counts once.
    """
    rows = []
    for line in _read_text(source).splitlines():
        tokens = line.split()
        if tokens:
            rows.append(set(tokens))
    if not rows:
        raise LoadError("no transactions in input")
    names = sorted(set().union(*rows))
    index = {name: j for j, name in enumerate(names)}
    columns = [0] * len(names)
    for t, row in enumerate(rows):
        bit = 1 << t
        for token in row:
            columns[index[token]] |= bit
    return Relation(names, columns, len(rows))


def load_csv_matrix(source: IO[bytes] | IO[str] | bytes | str) -> Relation:
    """Read a 0/1 matrix with a header row of attribute names."""
    reader = csv.reader(io.StringIO(_read_text(source)))
    header = None
    columns: list[int] = []
    n = 0
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if header is None:
            header = [cell.strip() for cell in row]
            for j, name in enumerate(header):
                if not name:
                    raise LoadError(f"row {lineno}, column {j + 1}: empty attribute name")
                if name in header[:j]:
                    raise LoadError(f"row {lineno}, column {j + 1}: duplicate attribute name {name!r}")
            columns = [0] * len(header)
            continue
        if len(row) != len(header):
            raise LoadError(f"row {lineno}: expected {len(header)} cells, found {len(row)}")
        bit = 1 << n
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "1":
                columns[j] |= bit
            elif cell != "0":
                raise LoadError(f"row {lineno}, column {j + 1}: non-binary cell {cell!r}")
        n += 1
    if header is None:
        raise LoadError("empty input")
    if n == 0:
        raise LoadError("no data rows after header")
    return Relation(header, columns, n)


def write_csv_matrix(rel: Relation, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(rel.names)
    for row in rel.to_matrix():
        writer.writerow([int(v) for v in row])


def read_relation(path: str | os.PathLike, fmt: str | None = None) -> Relation:
    """Load a dataset file; ``.csv`` means a 0/1 matrix unless ``fmt`` says otherwise."""
    if fmt is None:
        fmt = "csv" if os.fspath(path).lower().endswith(".csv") else "transactions"
    with open(path, "rb") as fh:
        if fmt == "csv":
            return load_csv_matrix(fh)
        if fmt == "transactions":
            return load_transactions(fh)
    raise ValueError(f"unknown dataset format {fmt!r}")
