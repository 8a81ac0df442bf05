"""Factorial arrangement of cubes: MCA, test-values, homogeneity.

The fact population is coded as a 0/1 indicator matrix (one row per fact,
one column per member of each chosen (dimension, level) variable; each row
carries exactly one 1 per variable). Correspondence analysis of that matrix
yields factorial axes; a signed test-value locates every member on every
axis; sorting each cube axis by test-value gathers full cells together, and
a homogeneity score in [0, 1] quantifies how much.

Test-value of member j on axis a:

    t(j, a) = m(j, a) * sqrt(n_j * (n - 1) / (n - n_j)) / sqrt(lambda_a)

with m(j, a) the mean coordinate on axis a of the facts carrying member j,
n_j the member's frequency and lambda_a the axis eigenvalue. Members carried
by no fact or by all facts are untestable.

Homogeneity of a cube arrangement: neighbors of a cell differ by exactly one
position along exactly one axis's member order; a pair of full cells scores
1 - |v - v'| / (max - min over full cells) (1 when the range is 0), a
full/empty pair scores 0; the score is the sum over full cells and their
neighbors divided by the total neighbor count of full cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cube import AnnotatedCell, Cube, switch
from .errors import EngineError
from .model import Warehouse, ancestor_map

ColumnKey = tuple[str, str, str]  # (dimension id, level id, member id)

_SINGULAR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class IndicatorMatrix:
    matrix: np.ndarray  # n x J, entries in {0, 1}
    columns: tuple[ColumnKey, ...]
    variables: tuple[tuple[str, str], ...]  # Q (dimension, level) pairs
    zero_columns: tuple[ColumnKey, ...]  # members with zero facts, retained

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def j(self) -> int:
        return self.matrix.shape[1]

    @property
    def q(self) -> int:
        return len(self.variables)

    def frequencies(self) -> np.ndarray:
        return self.matrix.sum(axis=0)


@dataclass(frozen=True, eq=False)
class FactorialResult:
    eigenvalues: np.ndarray  # non-increasing, at most J - Q entries
    member_coordinates: Mapping[ColumnKey, np.ndarray]  # principal, per axis
    fact_coordinates: np.ndarray  # n x k principal row coordinates


@dataclass(frozen=True, eq=False)
class TestValueTable:
    values: Mapping[ColumnKey, np.ndarray]  # per factorial axis
    untestable: frozenset[ColumnKey]


@dataclass(frozen=True)
class HomogeneityScore:
    value: float  # in [0, 1]
    cell_count: int  # full grid size
    full_cell_count: int

    def to_dict(self) -> dict:
        return {"value": self.value, "cells": self.cell_count,
                "full_cells": self.full_cell_count}


# ---------------------------------------------------------------------------
# Indicator matrix


def build_indicator_matrix(warehouse: Warehouse,
                           variables: Sequence[tuple[str, str]]) -> IndicatorMatrix:
    """Code every fact row over the chosen (dimension, level) variables.

    Row sums equal Q by construction; column sums are member frequencies.
    Members no fact rolls up to keep an all-zero column and are flagged.
    """
    columns: list[ColumnKey] = []
    col_index: dict[ColumnKey, int] = {}
    ups: dict[tuple[str, str], dict[str, str]] = {}
    for dim_id, level_id in variables:
        data = warehouse.dimension_data.get(dim_id)
        level = data.level(level_id) if data is not None else None
        if level is None:
            raise EngineError("unknown-level",
                              f"no level {level_id!r} in dimension {dim_id!r}",
                              where=f"{dim_id}:{level_id}")
        try:
            ups[(dim_id, level_id)] = ancestor_map(data, data.levels[0].level_id, level_id)
        except (KeyError, ValueError) as exc:
            raise EngineError("level-unreachable",
                              f"cannot roll members of {dim_id!r} up to {level_id!r}: {exc}",
                              where=f"{dim_id}:{level_id}") from exc
        for member in level.ids():
            key = (dim_id, level_id, member)
            col_index[key] = len(columns)
            columns.append(key)

    rows = warehouse.facts.rows
    matrix = np.zeros((len(rows), len(columns)), dtype=float)
    for i, row in enumerate(rows):
        for dim_id, level_id in variables:
            base = row.dimension_members[dim_id]
            member = ups[(dim_id, level_id)].get(base)
            if member is None:
                raise EngineError("level-unreachable",
                                  f"fact {i} member {base!r} has no ancestor at "
                                  f"{level_id!r}", where=f"fact[{i}]")
            matrix[i, col_index[(dim_id, level_id, member)]] = 1.0

    zero = tuple(columns[j] for j in np.flatnonzero(matrix.sum(axis=0) == 0))
    return IndicatorMatrix(matrix=matrix, columns=tuple(columns),
                           variables=tuple(variables), zero_columns=zero)


# ---------------------------------------------------------------------------
# Correspondence analysis of the indicator matrix


def mca_axes(indicator: IndicatorMatrix) -> FactorialResult:
    """Factorial axes of the indicator matrix.

    Eigenvalues are the squared singular values of the standardized residual
    matrix; with no zero-frequency member, they sum to (J - Q) / Q. Fact
    coordinates are centered by construction. Deterministic sign convention:
    the first member with a nonzero coordinate on each axis is positive.
    """
    z = indicator.matrix
    n, j = z.shape
    q = indicator.q
    if n < 2:
        raise EngineError("degenerate-input", f"MCA needs at least 2 facts, got {n}")
    starts = _variable_spans(indicator)
    freq = indicator.frequencies()
    for (dim_id, level_id), (lo, hi) in zip(indicator.variables, starts):
        if int(np.count_nonzero(freq[lo:hi])) < 2:
            raise EngineError("degenerate-variable",
                              f"variable {dim_id}:{level_id} has fewer than two "
                              f"occupied members", where=f"{dim_id}:{level_id}")

    total = z.sum()
    p = z / total
    r = np.full(n, 1.0 / n)
    c = freq / total
    with np.errstate(divide="ignore"):
        dr = 1.0 / np.sqrt(r)
        dc = np.where(c > 0, 1.0 / np.sqrt(np.where(c > 0, c, 1.0)), 0.0)
    s = dr[:, None] * (p - np.outer(r, c)) * dc[None, :]

    u, sigma, vt = np.linalg.svd(s, full_matrices=False)
    cutoff = max(_SINGULAR_TOL, sigma[0] * 1e-12) if sigma.size else _SINGULAR_TOL
    keep = min(int(np.sum(sigma > cutoff)), j - q)
    u, sigma, vt = u[:, :keep], sigma[:keep], vt[:keep]

    fact_coords = dr[:, None] * u * sigma[None, :]
    member_coords = dc[:, None] * vt.T * sigma[None, :]

    # sign convention: first nonzero member coordinate per axis is positive
    for a in range(keep):
        col = member_coords[:, a]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            member_coords[:, a] = -member_coords[:, a]
            fact_coords[:, a] = -fact_coords[:, a]

    coords = {key: member_coords[idx].copy()
              for idx, key in enumerate(indicator.columns)}
    return FactorialResult(eigenvalues=sigma ** 2,
                           member_coordinates=coords,
                           fact_coordinates=fact_coords)


def _variable_spans(indicator: IndicatorMatrix) -> list[tuple[int, int]]:
    spans = []
    start = 0
    for dim_id, level_id in indicator.variables:
        count = sum(1 for key in indicator.columns if key[:2] == (dim_id, level_id))
        spans.append((start, start + count))
        start += count
    return spans


# ---------------------------------------------------------------------------
# Test-values


def test_values(result: FactorialResult, indicator: IndicatorMatrix) -> TestValueTable:
    """Signed significance of every member's position on every axis.

    Members with frequency 0 or n are untestable and get no value.
    """
    n = indicator.n
    freq = indicator.frequencies()
    k = result.eigenvalues.shape[0]
    sqrt_ev = np.sqrt(result.eigenvalues)

    values: dict[ColumnKey, np.ndarray] = {}
    untestable: set[ColumnKey] = set()
    for idx, key in enumerate(indicator.columns):
        n_j = int(freq[idx])
        if n_j in (0, n):
            untestable.add(key)
            continue
        carriers = indicator.matrix[:, idx] > 0
        mean_coord = result.fact_coordinates[carriers].mean(axis=0)
        scale = np.sqrt(n_j * (n - 1) / (n - n_j))
        values[key] = mean_coord * scale / sqrt_ev[:k]
    return TestValueTable(values=values, untestable=frozenset(untestable))


# ---------------------------------------------------------------------------
# Arrangement


def arrange_cube(cube: Cube, table: TestValueTable) -> Cube:
    """Reorder every axis by test-value on factorial axis 1, descending.

    Ties break on axis 2, then member id; untestable members go last. Pure
    permutation (a composition of switch operations): cell contents are
    untouched.
    """
    arranged = cube
    for axis in cube.axes:
        def sort_key(member: str):
            key = (axis.dim_id, axis.level_id, member)
            if key in table.untestable:
                return (1, member)
            tv = table.values.get(key)
            if tv is None:
                raise EngineError("missing-test-value",
                                  f"no test-value row for member {member!r} of "
                                  f"{axis.dim_id}:{axis.level_id}", where=member)
            head = tuple(-float(tv[a]) for a in range(min(2, tv.shape[0])))
            return (0,) + head + (member,)

        new_order = tuple(sorted(axis.member_order, key=sort_key))
        if new_order != axis.member_order:
            arranged = switch(arranged, axis.dim_id, new_order)
    return arranged


# ---------------------------------------------------------------------------
# Homogeneity criterion


def homogeneity(cube: Cube) -> HomogeneityScore:
    """Score in [0, 1] for how well full, similar-valued cells sit together.

    A lone full cell with no grid neighbor scores 1 (vacuously homogeneous);
    a cube with zero full cells scores 0.
    """
    if not cube.axes:
        raise EngineError("no-axes", "homogeneity needs at least one axis")
    positions = [{m: i for i, m in enumerate(ax.member_order)} for ax in cube.axes]
    sizes = [len(ax.member_order) for ax in cube.axes]
    grid_cells = int(np.prod(sizes)) if sizes else 0

    full: dict[tuple[str, ...], float] = {}
    for coord, cell in cube.cells.items():
        if isinstance(cell, AnnotatedCell):
            raise EngineError("pushed-cube",
                              "homogeneity is not defined on pushed cell content")
        full[coord] = cell.value
    if not full:
        return HomogeneityScore(value=0.0, cell_count=grid_cells, full_cell_count=0)

    lo = min(full.values())
    hi = max(full.values())
    span = hi - lo

    def similarity(a: tuple[str, ...], b: tuple[str, ...]) -> float:
        if b not in full:
            return 0.0
        if span == 0:
            return 1.0
        return 1.0 - abs(full[a] - full[b]) / span

    numerator = 0.0
    denominator = 0
    for coord in full:
        for a, axis in enumerate(cube.axes):
            pos = positions[a][coord[a]]
            for step in (-1, 1):
                npos = pos + step
                if 0 <= npos < sizes[a]:
                    neighbor = coord[:a] + (axis.member_order[npos],) + coord[a + 1:]
                    numerator += similarity(coord, neighbor)
                    denominator += 1
    value = numerator / denominator if denominator else 1.0
    return HomogeneityScore(value=value, cell_count=grid_cells,
                            full_cell_count=len(full))
