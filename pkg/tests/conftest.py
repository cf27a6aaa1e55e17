"""
Shared fixtures: hand-built scenes on a 6 x 6 grid of unit cells over [0, 6]^2
"""

import numpy as np
import pytest

from modules.geom_core import ObstacleSet, PointSet, Polygon, Rect

SIDE = 6
MARGIN = 0.02


def cell_box(cell_id, side=SIDE):
    """x and y ranges of a unit cell; row 0 is the top row"""
    row, col = divmod(cell_id, side)
    y_lo = side - 1 - row
    return (col, col + 1), (y_lo, y_lo + 1)


def fill_cells(layout, default=0, seed=0, side=SIDE):
    """Points scattered inside unit cells.

    ``layout`` maps a cell id to a count or to ``(count, (x_lo, x_hi))`` when
    the points must stay in a vertical strip of the cell. Cells missing from
    the layout get ``default`` points. Points are emitted in cell id order.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    chunks = []
    for cid in range(side * side):
        spec = layout.get(cid, default)
        (x_lo, x_hi), (y_lo, y_hi) = cell_box(cid, side)
        if isinstance(spec, tuple):
            spec, (x_lo, x_hi) = spec
        if spec == 0:
            continue
        xs = rng.uniform(x_lo + MARGIN, x_hi - MARGIN, spec)
        ys = rng.uniform(y_lo + MARGIN, y_hi - MARGIN, spec)
        chunks.append(np.column_stack([xs, ys]))
    return PointSet(np.vstack(chunks))


@pytest.fixture
def unit_bounds():
    return Rect.from_bounds(0, 0, SIDE, SIDE)


@pytest.fixture
def scld_scene():
    """5000 points, d = 125 at m = 36, h = 0.9.

    Dense cells 0, 1 / 19, 25 / 21, 27 form three regions. Cell 20 (120
    points) cannot join the {19, 25} region (250 + 120 < 3 * 125) and goes to
    the {21, 27} region instead, as does cell 26 (110 points).
    """
    layout = {0: 400, 1: 400, 19: 125, 20: 120, 21: 600, 25: 125, 26: 110, 27: 600}
    return fill_cells(layout, default=90)


@pytest.fixture
def river():
    """A thin vertical obstacle through column 2, crossing cells 14, 20 and 26"""
    return ObstacleSet((Polygon.from_coords([(2.05, 1.05), (2.45, 1.05), (2.45, 3.95), (2.05, 3.95)]),))


@pytest.fixture
def river_scene():
    """5000 points, d = 125 at m = 36, h = 0.9, around the river obstacle.

    Cells 13 and 19 sit left of the river, 15 and 21 right of it. The
    obstructed cells hold points only east of the river, in sub-cells covering
    half of their cell.
    """
    east = (2.5, 3.0)
    layout = {
        0: 400, 1: 400, 13: 500, 14: (300, east), 15: 600,
        19: 180, 20: (100, east), 21: 600, 26: (50, east),
    }
    others = [c for c in range(SIDE * SIDE) if c not in layout]
    for i, cid in enumerate(others):
        layout[cid] = 70 if i < 7 else 69
    return fill_cells(layout)


@pytest.fixture
def random_scene():
    """Factory for clumpy random scenes inside [0, 6]^2: a few Gaussian clumps over uniform background"""
    def make(seed, n=3000):
        rng = np.random.Generator(np.random.PCG64(seed))
        clumps = int(rng.integers(2, 6))
        centers = rng.uniform(0.5, SIDE - 0.5, size=(clumps, 2))
        labels = rng.integers(0, clumps + 1, size=n)
        coords = rng.uniform(0, SIDE, size=(n, 2))
        clumped = labels < clumps
        coords[clumped] = rng.normal(centers[labels[clumped]], rng.uniform(0.2, 0.8))
        return PointSet(np.clip(coords, 0, SIDE))
    return make
