"""Discrete rectangular location universe.

Cells are integer indices laid out row-major: index i maps to
(row, col) = (i // width, i % width). Distances are measured between
cell centers, in meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class GridWorld:
    """A width x height grid of square cells of edge `cell_size` meters.

    `origin` is the planar (x, y) coordinate of the center of cell 0,
    in meters.
    """

    width: int
    height: int
    cell_size: float = 1.0
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def cells(self) -> range:
        return range(self.n_cells)

    def contains(self, cell: int) -> bool:
        return 0 <= cell < self.n_cells

    def require_cell(self, cell: int) -> None:
        if not self.contains(cell):
            raise ValueError(f"cell {cell} outside {self.width}x{self.height} grid")

    def row_col(self, cell: int) -> tuple[int, int]:
        self.require_cell(cell)
        return divmod(cell, self.width)

    def cell_at(self, row: int, col: int) -> int:
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise ValueError(f"(row={row}, col={col}) outside {self.width}x{self.height} grid")
        return row * self.width + col

    def center(self, cell: int) -> tuple[float, float]:
        """Planar (x, y) coordinate of the cell center, meters."""
        row, col = self.row_col(cell)
        return (self.origin[0] + col * self.cell_size, self.origin[1] + row * self.cell_size)

    def euclid(self, a: int, b: int) -> float:
        """Euclidean distance between cell centers, meters."""
        ra, ca = self.row_col(a)
        rb, cb = self.row_col(b)
        return self.cell_size * math.hypot(ra - rb, ca - cb)

    def euclid_cells(self, a: int, b: int) -> float:
        """Euclidean distance in cell units (cell_size-normalized)."""
        ra, ca = self.row_col(a)
        rb, cb = self.row_col(b)
        return math.hypot(ra - rb, ca - cb)

    def king_neighbors(self, cell: int) -> list[int]:
        """The <= 8 cells adjacent by a king move, ascending."""
        row, col = self.row_col(cell)
        out = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                r, c = row + dr, col + dc
                if 0 <= r < self.height and 0 <= c < self.width:
                    out.append(r * self.width + c)
        return sorted(out)


@dataclass(frozen=True)
class Partition:
    """Total assignment of every grid cell to one area.

    `area_of` maps cell index -> area identifier. Areas are whatever
    hashable labels the caller picks (ints, strings).
    """

    area_of: dict[int, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for cell in self.area_of:
            if not isinstance(cell, int) or cell < 0:
                raise ValueError(f"partition keys must be nonnegative cell indices, got {cell!r}")

    def areas(self) -> list[object]:
        seen: dict[object, None] = {}
        for area in self.area_of.values():
            seen.setdefault(area, None)
        return sorted(seen, key=repr)

    def cells_in(self, area: object) -> list[int]:
        return sorted(c for c, a in self.area_of.items() if a == area)

    def covers(self, grid: GridWorld) -> bool:
        return all(c in self.area_of for c in grid.cells())

    def require_total(self, grid: GridWorld) -> None:
        missing = [c for c in grid.cells() if c not in self.area_of]
        if missing:
            raise ValueError(
                f"partition must cover every grid cell; missing {len(missing)} "
                f"cells starting at {missing[0]}"
            )

    @classmethod
    def from_labels(cls, labels: list[object] | tuple[object, ...]) -> "Partition":
        """Build from a dense list: labels[i] is the area of cell i."""
        return cls({i: a for i, a in enumerate(labels)})


def block_partition(grid: GridWorld, block_w: int, block_h: int | None = None) -> Partition:
    """Partition the grid into rectangular blocks of block_w x block_h cells.

    Border blocks may be smaller. Area labels are block indices, row-major
    over the block lattice.
    """
    if block_h is None:
        block_h = block_w
    if block_w < 1 or block_h < 1:
        raise ValueError("block dimensions must be >= 1")
    blocks_per_row = (grid.width + block_w - 1) // block_w
    area_of: dict[int, object] = {}
    for cell in grid.cells():
        row, col = divmod(cell, grid.width)
        area_of[cell] = (row // block_h) * blocks_per_row + (col // block_w)
    return Partition(area_of)
