"""Data model and the product-of-marginals sampler.

A :class:`Dataset` is a plain numeric matrix with named columns.  A
:class:`VariableLayout` names the intervention groups X1..Xn and the
covariates Z as disjoint column sets.  Shuffling each group's rows with an
independent stream realizes samples from the target distribution
Q = P(X1) x ... x P(Xn) x P(Z) without ever modeling it explicitly: every
column keeps its marginal, only the cross-group alignment is destroyed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError
from .rng import derive_seed, stream


@dataclass(frozen=True)
class Dataset:
    """N x D matrix of finite doubles with unique column names."""

    values: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            raise ConfigError(f"dataset values must be 2-d, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(str(c) for c in self.columns))
        n, d = values.shape
        if n < 1 or d < 1:
            raise ConfigError(f"dataset must have at least one row and column, got {n}x{d}")
        if len(self.columns) != d:
            raise ConfigError(f"{len(self.columns)} column names for {d} columns")
        if len(set(self.columns)) != d:
            raise ConfigError("duplicate column names")
        if not np.isfinite(values).all():
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise ConfigError(f"non-finite value at row {i}, column '{self.columns[j]}'")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise ConfigError(f"no column named '{name}'") from None

    def select_rows(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.values[idx], self.columns)


@dataclass(frozen=True)
class VariableLayout:
    """Ordered intervention groups plus an optional covariate block.

    ``groups`` maps group name to column indices; all index lists are
    mutually disjoint.  ``covariates`` may be empty (pure multi-intervention
    balancing), in which case no covariate stream is drawn.
    """

    groups: tuple[tuple[str, tuple[int, ...]], ...]
    covariates: tuple[int, ...] = ()

    def __post_init__(self):
        groups = tuple((str(n), tuple(int(c) for c in cols)) for n, cols in self.groups)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "covariates", tuple(int(c) for c in self.covariates))
        if not groups:
            raise ConfigError("layout needs at least one group")
        seen: set[int] = set()
        for name, cols in groups:
            if not cols:
                raise ConfigError(f"group '{name}' has no columns")
            if seen & set(cols):
                raise ConfigError(f"group '{name}' overlaps another block")
            seen |= set(cols)
        if seen & set(self.covariates):
            raise ConfigError("covariates overlap a group")

    @property
    def feature_columns(self) -> tuple[int, ...]:
        """Column indices in canonical order: groups first, then covariates."""
        cols: list[int] = []
        for _, gcols in self.groups:
            cols.extend(gcols)
        cols.extend(self.covariates)
        return tuple(cols)

    @property
    def n_features(self) -> int:
        return len(self.feature_columns)

    def validate_for(self, data: Dataset) -> None:
        top = max(self.feature_columns)
        if top >= data.n_cols:
            raise ConfigError(f"layout references column {top} but dataset has {data.n_cols}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "groups": [{"name": n, "columns": list(c)} for n, c in self.groups],
                "covariates": list(self.covariates),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "VariableLayout":
        try:
            raw = json.loads(text)
            groups = tuple((g["name"], tuple(g["columns"])) for g in raw["groups"])
            covariates = tuple(raw.get("covariates", ()))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"bad layout JSON: {exc}") from exc
        return cls(groups=groups, covariates=covariates)


def features(data: Dataset, layout: VariableLayout) -> np.ndarray:
    """Feature matrix in canonical layout order (groups, then covariates)."""
    layout.validate_for(data)
    return data.values[:, layout.feature_columns]


@dataclass(frozen=True)
class ShuffledView:
    """Per-group row permutations of a source dataset.

    Reading row i yields (x1[s1(i)], ..., xn[sn(i)], z[sz(i)]): columns in
    one group move together, different groups move independently, so every
    column multiset is preserved while cross-group dependence is broken.
    """

    source: Dataset
    layout: VariableLayout
    permutations: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        expected = len(self.layout.groups) + (1 if self.layout.covariates else 0)
        if len(self.permutations) != expected:
            raise ConfigError(f"{len(self.permutations)} permutations for {expected} blocks")
        n = self.source.n_rows
        for perm in self.permutations:
            if sorted(perm.tolist()) != list(range(n)):
                raise ConfigError("permutation is not a bijection on the row index set")

    def _blocks(self):
        blocks = [cols for _, cols in self.layout.groups]
        if self.layout.covariates:
            blocks.append(self.layout.covariates)
        return blocks

    def materialize(self) -> np.ndarray:
        """Full N x D matrix; columns outside the layout keep source order."""
        out = self.source.values.copy()
        for perm, cols in zip(self.permutations, self._blocks()):
            out[:, cols] = self.source.values[np.ix_(perm, cols)]
        return out

    def features(self) -> np.ndarray:
        """Shuffled feature matrix in canonical layout order."""
        parts = [
            self.source.values[np.ix_(perm, cols)]
            for perm, cols in zip(self.permutations, self._blocks())
        ]
        return np.concatenate(parts, axis=1)


def product_shuffle(data: Dataset, layout: VariableLayout, seed: int) -> ShuffledView:
    """Independently permute each group block (and covariates) by row.

    Streams are split as ``seed XOR block_index`` with the covariate block
    at index ``len(groups)``, so a run is reproducible from one seed and
    blocks never share a stream.
    """
    layout.validate_for(data)
    n = data.n_rows
    perms = []
    n_blocks = len(layout.groups) + (1 if layout.covariates else 0)
    for index in range(n_blocks):
        perms.append(stream(seed, index).permutation(n))
    return ShuffledView(source=data, layout=layout, permutations=tuple(perms))


def minibatch_indices(n: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Seeded random partition of range(n) into ceil(n / batch_size) batches."""
    if batch_size < 1 or batch_size > n:
        raise ConfigError(f"batch_size must be in [1, {n}], got {batch_size}")
    perm = stream(derive_seed(seed, epoch)).permutation(n)
    n_batches = math.ceil(n / batch_size)
    return [perm[i * batch_size : (i + 1) * batch_size] for i in range(n_batches)]


def load_csv(path: str) -> Dataset:
    """Read a comma-separated numeric file with a header row."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise ParseError(f"{path}: duplicate headers")
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                bad = next(i for i, cell in enumerate(row) if not _is_number(cell))
                raise ParseError(
                    f"{path}: non-numeric value '{row[bad]}' at row {lineno}, column '{header[bad]}'"
                ) from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return Dataset(values=np.array(rows, dtype=float), columns=tuple(header))


def save_csv(data: Dataset, path: str) -> None:
    """Write with shortest round-trip decimals: load(save(d)) == d exactly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.columns)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])


def _is_number(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
