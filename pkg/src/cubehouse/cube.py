"""Data cubes and the nine OLAP operators.

A cube holds one axis per chosen (dimension, level) pair and a sparse cell
mapping from coordinate tuples (one instance id per axis) to cell values.
Cells keep (sum, count, min, max) accumulators next to the presentation
value so re-aggregation is exact for every aggregate, AVG included: rolling
up merges accumulators and recomputes the value instead of averaging
averages.

A coordinate missing from the mapping is an *empty* cell (no contributing
facts); a fact with measure 0 produces a non-empty cell with value 0. The
distinction matters downstream for the arrangement homogeneity score.

Operators: build, roll-up, drill-down, slice, dice, rotate, switch, push,
pull. All are pure: each returns a new cube. Slice/dice predicates are
recorded in the provenance, so drill-down can recompute from the fact table
with every recorded predicate reapplied.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

from .errors import EngineError
from .model import Warehouse, ancestor_map

AGGREGATES = ("SUM", "COUNT", "AVG", "MIN", "MAX")

Coordinate = tuple[str, ...]


@dataclass(frozen=True)
class Axis:
    dim_id: str
    level_id: str
    member_order: tuple[str, ...]


@dataclass(frozen=True)
class CellValue:
    sum: float
    count: int
    min: float
    max: float
    value: float  # aggregate-selected presentation value

    @staticmethod
    def of(agg: str, total: float, count: int, mn: float, mx: float) -> "CellValue":
        return CellValue(sum=total, count=count, min=mn, max=mx,
                         value=_present(agg, total, count, mn, mx))

    def merged(self, other: "CellValue", agg: str) -> "CellValue":
        return CellValue.of(agg, self.sum + other.sum, self.count + other.count,
                            min(self.min, other.min), max(self.max, other.max))


def _present(agg: str, total: float, count: int, mn: float, mx: float) -> float:
    if agg == "SUM":
        return total
    if agg == "COUNT":
        return count
    if agg == "AVG":
        return total / count
    if agg == "MIN":
        return mn
    return mx


@dataclass(frozen=True)
class AnnotatedCell:
    """Cell content after a push: (member id, value) pairs in axis order."""

    entries: tuple[tuple[str, CellValue], ...]


@dataclass(frozen=True)
class Filter:
    """Recorded slice/dice predicate: keep facts whose ancestor at
    ``level_id`` is one of ``members``."""

    dim_id: str
    level_id: str
    members: frozenset[str]


@dataclass(frozen=True)
class Provenance:
    warehouse: Warehouse
    filters: tuple[Filter, ...] = ()


@dataclass(frozen=True)
class PushedAxis:
    axis: Axis
    position: int


@dataclass(frozen=True)
class Cube:
    axes: tuple[Axis, ...]
    measure_id: str
    aggregate: str
    cells: Mapping[Coordinate, CellValue | AnnotatedCell]
    provenance: Provenance
    pushed: PushedAxis | None = None

    def axis_index(self, dim_id: str) -> int:
        for i, ax in enumerate(self.axes):
            if ax.dim_id == dim_id:
                return i
        raise EngineError("dimension-not-on-axis",
                          f"dimension {dim_id!r} is not a cube axis", where=dim_id)

    def coordinates(self) -> Iterable[Coordinate]:
        """All grid coordinates in row-major axis member order."""
        if not self.axes:
            return iter([()])
        return itertools.product(*(ax.member_order for ax in self.axes))

    def value_at(self, coord: Coordinate) -> float | None:
        cell = self.cells.get(coord)
        if cell is None or isinstance(cell, AnnotatedCell):
            return None
        return cell.value


# ---------------------------------------------------------------------------
# Construction


def _fact_passes(ancestor_of: dict[str, dict[str, str]], filters: tuple[Filter, ...],
                 members: Mapping[str, str]) -> bool:
    for flt in filters:
        mapped = ancestor_of[(flt.dim_id, flt.level_id)].get(members[flt.dim_id])
        if mapped not in flt.members:
            return False
    return True


def _restricted_order(warehouse: Warehouse, dim_id: str, level_id: str,
                      filters: tuple[Filter, ...]) -> tuple[str, ...]:
    """Document-order members of a level, narrowed by any filter at the same
    or a coarser level of the same dimension."""
    data = warehouse.dimension_data[dim_id]
    level = data.level(level_id)
    order = list(level.ids())
    spec = warehouse.model.dimension(dim_id)
    axis_pos = spec.level_index(level_id)
    for flt in filters:
        if flt.dim_id != dim_id:
            continue
        flt_pos = spec.level_index(flt.level_id)
        if flt_pos < axis_pos:
            continue  # finer-level filter cannot restrict a coarser axis
        up = ancestor_map(data, level_id, flt.level_id)
        order = [m for m in order if up[m] in flt.members]
    return tuple(order)


def _build(warehouse: Warehouse, axis_specs: Sequence[tuple[str, str]],
           measure_id: str, aggregate: str, filters: tuple[Filter, ...]) -> Cube:
    model = warehouse.model
    spec_dims = set()
    for dim_id, level_id in axis_specs:
        dim = model.dimension(dim_id)
        if dim is None:
            raise EngineError("unknown-dimension", f"unknown dimension {dim_id!r}", where=dim_id)
        if dim.level(level_id) is None:
            raise EngineError("unknown-level",
                              f"dimension {dim_id!r} has no level {level_id!r}", where=level_id)
        if dim_id in spec_dims:
            raise EngineError("duplicate-axis",
                              f"dimension {dim_id!r} appears on two axes", where=dim_id)
        spec_dims.add(dim_id)
    if model.facts.measure(measure_id) is None:
        raise EngineError("unknown-measure", f"unknown measure {measure_id!r}", where=measure_id)
    if aggregate not in AGGREGATES:
        raise EngineError("unknown-aggregate",
                          f"aggregate {aggregate!r} is not one of {AGGREGATES}", where=aggregate)

    # finest-member -> axis/filter-level member, per referenced (dim, level)
    ancestor_of: dict[tuple[str, str], dict[str, str]] = {}
    for dim_id, level_id in list(axis_specs) + [(f.dim_id, f.level_id) for f in filters]:
        key = (dim_id, level_id)
        if key not in ancestor_of:
            data = warehouse.dimension_data[dim_id]
            finest = data.levels[0].level_id
            ancestor_of[key] = ancestor_map(data, finest, level_id)

    acc: dict[Coordinate, list] = {}
    for row in warehouse.facts.rows:
        if not _fact_passes(ancestor_of, filters, row.dimension_members):
            continue
        coord = tuple(
            ancestor_of[(dim_id, level_id)][row.dimension_members[dim_id]]
            for dim_id, level_id in axis_specs
        )
        v = row.measure_values[measure_id]
        slot = acc.get(coord)
        if slot is None:
            acc[coord] = [v, 1, v, v]
        else:
            slot[0] += v
            slot[1] += 1
            if v < slot[2]:
                slot[2] = v
            if v > slot[3]:
                slot[3] = v

    cells = {coord: CellValue.of(aggregate, *slot) for coord, slot in acc.items()}
    axes = tuple(
        Axis(dim_id, level_id, _restricted_order(warehouse, dim_id, level_id, filters))
        for dim_id, level_id in axis_specs
    )
    return Cube(axes=axes, measure_id=measure_id, aggregate=aggregate, cells=cells,
                provenance=Provenance(warehouse=warehouse, filters=filters))


def build_cube(warehouse: Warehouse, axis_specs: Sequence[tuple[str, str]],
               measure_id: str, aggregate: str) -> Cube:
    """Aggregate the fact table onto the chosen (dimension, level) axes.

    A cell at coordinate (m1..mk) aggregates exactly the fact rows whose
    finest-level members roll up to mi on every axis; dimensions not on any
    axis are aggregated over entirely. An empty warehouse yields an all-empty
    cube for every aggregate.
    """
    return _build(warehouse, axis_specs, measure_id, aggregate, ())


# ---------------------------------------------------------------------------
# Operators


def _require_plain(cube: Cube, op: str) -> None:
    if cube.pushed is not None:
        raise EngineError("pushed-cube",
                          f"{op} is not defined on a cube holding pushed content", where=op)


def roll_up(cube: Cube, dim_id: str, target_level_id: str) -> Cube:
    """Merge cells up the hierarchy; AVG stays exact via merged accumulators."""
    _require_plain(cube, "roll-up")
    idx = cube.axis_index(dim_id)
    axis = cube.axes[idx]
    warehouse = cube.provenance.warehouse
    spec = warehouse.model.dimension(dim_id)
    if spec.level(target_level_id) is None:
        raise EngineError("unknown-level",
                          f"dimension {dim_id!r} has no level {target_level_id!r}",
                          where=target_level_id)
    if spec.level_index(target_level_id) <= spec.level_index(axis.level_id):
        raise EngineError("target-not-coarser",
                          f"level {target_level_id!r} is not coarser than {axis.level_id!r}",
                          where=target_level_id)

    data = warehouse.dimension_data[dim_id]
    up = ancestor_map(data, axis.level_id, target_level_id)

    merged: dict[Coordinate, CellValue] = {}
    for coord, cell in cube.cells.items():
        new_coord = coord[:idx] + (up[coord[idx]],) + coord[idx + 1:]
        existing = merged.get(new_coord)
        merged[new_coord] = cell if existing is None else existing.merged(cell, cube.aggregate)

    # same member order a recompute at the target level would produce
    target_order = _restricted_order(warehouse, dim_id, target_level_id,
                                     cube.provenance.filters)
    axes = cube.axes[:idx] + (Axis(dim_id, target_level_id, target_order),) + cube.axes[idx + 1:]
    return replace(cube, axes=axes, cells=merged)


def drill_down(cube: Cube, dim_id: str, target_level_id: str) -> Cube:
    """Recompute at a finer level from the fact table, every recorded
    slice/dice predicate reapplied."""
    _require_plain(cube, "drill-down")
    idx = cube.axis_index(dim_id)
    axis = cube.axes[idx]
    warehouse = cube.provenance.warehouse
    spec = warehouse.model.dimension(dim_id)
    if spec.level(target_level_id) is None:
        raise EngineError("unknown-level",
                          f"dimension {dim_id!r} has no level {target_level_id!r}",
                          where=target_level_id)
    if spec.level_index(target_level_id) >= spec.level_index(axis.level_id):
        raise EngineError("target-not-finer",
                          f"level {target_level_id!r} is not finer than {axis.level_id!r}",
                          where=target_level_id)
    axis_specs = [(ax.dim_id, target_level_id if i == idx else ax.level_id)
                  for i, ax in enumerate(cube.axes)]
    return _build(warehouse, axis_specs, cube.measure_id, cube.aggregate,
                  cube.provenance.filters)


def slice_cube(cube: Cube, dim_id: str, member_id: str) -> Cube:
    """Fix one member and drop its axis."""
    _require_plain(cube, "slice")
    idx = cube.axis_index(dim_id)
    axis = cube.axes[idx]
    if member_id not in axis.member_order:
        raise EngineError("unknown-member",
                          f"{member_id!r} is not a member of axis {dim_id!r}", where=member_id)
    cells = {
        coord[:idx] + coord[idx + 1:]: cell
        for coord, cell in cube.cells.items()
        if coord[idx] == member_id
    }
    filters = cube.provenance.filters + (
        Filter(dim_id, axis.level_id, frozenset({member_id})),)
    return replace(cube, axes=cube.axes[:idx] + cube.axes[idx + 1:], cells=cells,
                   provenance=replace(cube.provenance, filters=filters))


def dice(cube: Cube, predicates: Mapping[str, Iterable[str]]) -> Cube:
    """Keep only the listed members on each named axis (order preserved)."""
    _require_plain(cube, "dice")
    keep: dict[int, frozenset[str]] = {}
    filters = cube.provenance.filters
    for dim_id, members in predicates.items():
        idx = cube.axis_index(dim_id)
        member_set = frozenset(members)
        if not member_set:
            raise EngineError("empty-member-set",
                              f"dice predicate for {dim_id!r} lists no member", where=dim_id)
        unknown = member_set - set(cube.axes[idx].member_order)
        if unknown:
            raise EngineError("unknown-member",
                              f"dice predicate for {dim_id!r} names unknown members "
                              f"{sorted(unknown)}", where=dim_id)
        keep[idx] = member_set
        filters = filters + (Filter(dim_id, cube.axes[idx].level_id, member_set),)

    axes = tuple(
        replace(ax, member_order=tuple(m for m in ax.member_order if m in keep[i]))
        if i in keep else ax
        for i, ax in enumerate(cube.axes)
    )
    cells = {
        coord: cell for coord, cell in cube.cells.items()
        if all(coord[i] in members for i, members in keep.items())
    }
    return replace(cube, axes=axes, cells=cells,
                   provenance=replace(cube.provenance, filters=filters))


def rotate(cube: Cube, permutation: Sequence[int]) -> Cube:
    """Reorder axes; cell contents unchanged, coordinates permuted."""
    if sorted(permutation) != list(range(len(cube.axes))):
        raise EngineError("not-a-permutation",
                          f"{list(permutation)} is not a permutation of the "
                          f"{len(cube.axes)} axis indices", where=str(list(permutation)))
    axes = tuple(cube.axes[p] for p in permutation)
    cells = {tuple(coord[p] for p in permutation): cell
             for coord, cell in cube.cells.items()}
    return replace(cube, axes=axes, cells=cells)


def switch(cube: Cube, dim_id: str, new_member_order: Sequence[str]) -> Cube:
    """Change one axis's presentation order; cell contents unchanged.

    Only member reordering: exchanging whole hierarchy branches would be a
    dimension-data rewrite, which belongs to the evolution module.
    """
    idx = cube.axis_index(dim_id)
    axis = cube.axes[idx]
    if sorted(new_member_order) != sorted(axis.member_order):
        raise EngineError("not-a-permutation",
                          f"new order for {dim_id!r} is not a permutation of its members",
                          where=dim_id)
    axes = cube.axes[:idx] + (replace(axis, member_order=tuple(new_member_order)),) \
        + cube.axes[idx + 1:]
    return replace(cube, axes=axes)


def push(cube: Cube, dim_id: str) -> Cube:
    """Turn an axis's member ids into cell content: each remaining cell holds
    (member id, value) pairs. Inverse of pull."""
    _require_plain(cube, "push")
    idx = cube.axis_index(dim_id)
    axis = cube.axes[idx]
    member_pos = {m: i for i, m in enumerate(axis.member_order)}

    grouped: dict[Coordinate, list[tuple[str, CellValue]]] = {}
    for coord, cell in cube.cells.items():
        reduced = coord[:idx] + coord[idx + 1:]
        grouped.setdefault(reduced, []).append((coord[idx], cell))
    cells = {
        coord: AnnotatedCell(tuple(sorted(entries, key=lambda e: member_pos[e[0]])))
        for coord, entries in grouped.items()
    }
    return replace(cube, axes=cube.axes[:idx] + cube.axes[idx + 1:], cells=cells,
                   pushed=PushedAxis(axis=axis, position=idx))


def pull(cube: Cube, labeling: Callable[[float], str] | None = None,
         dim_id: str = "pulled", level_id: str = "label") -> Cube:
    """Create an axis from cell content.

    Without a labeling function this undoes a push exactly (the stored axis
    is reinserted at its original position). With one, cell values are
    grouped under the computed labels on a synthetic axis; two values mapping
    to the same label at one coordinate is an error.
    """
    if cube.pushed is not None:
        pos = cube.pushed.position
        cells: dict[Coordinate, CellValue] = {}
        labels_seen: list[str] = []
        for coord, cell in cube.cells.items():
            assert isinstance(cell, AnnotatedCell)
            seen_here: set[str] = set()
            for member, value in cell.entries:
                label = member if labeling is None else labeling(value.value)
                if label in seen_here:
                    raise EngineError("duplicate-pull-label",
                                      f"label {label!r} occurs twice at coordinate {coord}",
                                      where=label)
                seen_here.add(label)
                if label not in labels_seen:
                    labels_seen.append(label)
                cells[coord[:pos] + (label,) + coord[pos:]] = value
        if labeling is None:
            axis = cube.pushed.axis
        else:
            axis = Axis(dim_id, level_id, tuple(sorted(labels_seen)))
        axes = cube.axes[:pos] + (axis,) + cube.axes[pos:]
        return replace(cube, axes=axes, cells=cells, pushed=None)

    if labeling is None:
        raise EngineError("nothing-to-pull",
                          "cube holds plain numeric cells and no labeling was given",
                          where="pull")
    labels_seen = []
    cells = {}
    for coord, cell in cube.cells.items():
        assert isinstance(cell, CellValue)
        label = labeling(cell.value)
        if label not in labels_seen:
            labels_seen.append(label)
        cells[coord + (label,)] = cell
    axis = Axis(dim_id, level_id, tuple(sorted(labels_seen)))
    return replace(cube, axes=cube.axes + (axis,), cells=cells)


# ---------------------------------------------------------------------------
# Export formats (documented and stable)


def _iter_cells(cube: Cube):
    """Non-empty cells in row-major axis member order."""
    for coord in cube.coordinates():
        cell = cube.cells.get(coord)
        if cell is not None:
            yield coord, cell


def cube_to_table(cube: Cube) -> str:
    """Tabular text: one line per non-empty cell — coordinate ids, then the
    four accumulators, then the presentation value. Tab-separated, with a
    header line naming the axis dimensions."""
    header = [f"{ax.dim_id}:{ax.level_id}" for ax in cube.axes]
    if cube.pushed is not None:
        header.append(f"{cube.pushed.axis.dim_id}:{cube.pushed.axis.level_id}(pushed)")
    lines = ["\t".join(header + ["sum", "count", "min", "max", "value"])]
    for coord, cell in _iter_cells(cube):
        if isinstance(cell, AnnotatedCell):
            for member, value in cell.entries:
                lines.append("\t".join(
                    list(coord) + [member] + _accumulator_fields(value)))
        else:
            lines.append("\t".join(list(coord) + _accumulator_fields(cell)))
    return "\n".join(lines) + "\n"


def _accumulator_fields(cell: CellValue) -> list[str]:
    return [repr(cell.sum), str(cell.count), repr(cell.min), repr(cell.max),
            repr(cell.value)]


def _cell_dict(coord: Coordinate, cell: CellValue) -> dict:
    return {"coordinate": list(coord), "sum": cell.sum, "count": cell.count,
            "min": cell.min, "max": cell.max, "value": cell.value}


def cube_to_json(cube: Cube) -> dict:
    """JSON rendering equivalent to the tabular export, plus enough structure
    (axes, filters, pushed axis) to rebuild the cube from its warehouse."""
    doc: dict = {
        "measure": cube.measure_id,
        "aggregate": cube.aggregate,
        "axes": [
            {"dimension": ax.dim_id, "level": ax.level_id, "members": list(ax.member_order)}
            for ax in cube.axes
        ],
        "filters": [
            {"dimension": f.dim_id, "level": f.level_id, "members": sorted(f.members)}
            for f in cube.provenance.filters
        ],
    }
    cells = []
    for coord, cell in _iter_cells(cube):
        if isinstance(cell, AnnotatedCell):
            for member, value in cell.entries:
                entry = _cell_dict(coord, value)
                entry["label"] = member
                cells.append(entry)
        else:
            cells.append(_cell_dict(coord, cell))
    doc["cells"] = cells
    if cube.pushed is not None:
        doc["pushed"] = {
            "dimension": cube.pushed.axis.dim_id,
            "level": cube.pushed.axis.level_id,
            "members": list(cube.pushed.axis.member_order),
            "position": cube.pushed.position,
        }
    return doc


def cube_to_json_text(cube: Cube) -> str:
    return json.dumps(cube_to_json(cube), indent=2) + "\n"


def cube_from_json(warehouse: Warehouse, doc: Mapping) -> Cube:
    """Rebuild a cube against a warehouse from its JSON rendering.

    Cells are recomputed from the fact table (filters reapplied), then the
    exported axis order, member orders and pushed state are restored.
    """
    filters = tuple(
        Filter(f["dimension"], f["level"], frozenset(f["members"]))
        for f in doc.get("filters", ())
    )
    axis_specs = [(ax["dimension"], ax["level"]) for ax in doc["axes"]]
    pushed = doc.get("pushed")
    if pushed is not None:
        axis_specs.insert(pushed["position"], (pushed["dimension"], pushed["level"]))
    cube = _build(warehouse, axis_specs, doc["measure"], doc["aggregate"], filters)
    for ax in doc["axes"]:
        members = tuple(ax["members"])
        idx = cube.axis_index(ax["dimension"])
        current = cube.axes[idx]
        if members != current.member_order:
            if sorted(members) != sorted(current.member_order):
                raise EngineError("member-order-mismatch",
                                  f"exported member order for {ax['dimension']!r} does not "
                                  f"match the warehouse", where=ax["dimension"])
            cube = switch(cube, ax["dimension"], members)
    if pushed is not None:
        cube = push(cube, pushed["dimension"])
    return cube


def grand_totals(cube: Cube) -> tuple[float, int]:
    """(sum of cell sums, sum of cell counts) over all non-empty plain cells."""
    total = 0.0
    count = 0
    for cell in cube.cells.values():
        if isinstance(cell, CellValue):
            total += cell.sum
            count += cell.count
    return total, count
