import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubedisp import oracle
from cubedisp.errors import ValidationError
from cubedisp.grid import ScalarVolume
from cubedisp.selftest import FUZZ_VALUES
from cubedisp.tconstruction import (
    Cell,
    build_filtered_complex,
    cell_counts,
    dump_cells_csv,
    enumerate_cells,
    euler_characteristic,
    sublevel_voxels,
)

from conftest import cube_volume, hollow_shell


@st.composite
def volumes(draw, max_side=4, max_dim=3):
    d = draw(st.integers(2, max_dim))
    shape = tuple(draw(st.integers(1, max_side)) for _ in range(d))
    n = int(np.prod(shape))
    values = draw(st.lists(st.sampled_from(FUZZ_VALUES), min_size=n, max_size=n))
    bg = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    if all(bg):
        bg[0] = False
    return ScalarVolume(np.array(values).reshape(shape), np.array(bg).reshape(shape))


def test_single_voxel_closure():
    c = build_filtered_complex(cube_volume((1, 1, 1), 40))
    assert cell_counts(c) == [8, 12, 6, 1]
    assert set(np.unique(c.g)) == {60}


def test_face_adjacent_min_rule():
    vol = ScalarVolume(np.array([[[43]], [[30]]]), np.zeros((2, 1, 1), dtype=bool))
    c = build_filtered_complex(vol)
    shared = Cell((1, 0, 0), 0b110)
    assert shared.dim == 2
    assert c.cell_value(shared) == 57
    assert c.cell_provenance(shared) == (0, 0, 0)


def test_vertex_adjacent_min_rule():
    values = np.zeros((2, 2, 2), dtype=int)
    bg = np.ones((2, 2, 2), dtype=bool)
    values[0, 0, 0], values[1, 1, 1] = 80, 20
    bg[0, 0, 0] = bg[1, 1, 1] = False
    c = build_filtered_complex(ScalarVolume(values, bg))
    assert c.cell_value(Cell((1, 1, 1), 0)) == 20


def test_sublevel_voxels_threshold():
    c = build_filtered_complex(cube_volume((2, 2, 2), 43))
    assert sublevel_voxels(c, 56) == set()
    assert len(sublevel_voxels(c, 57)) == 8


def test_sublevel_full_threshold_excludes_background():
    vol = hollow_shell()
    c = build_filtered_complex(vol)
    assert sublevel_voxels(c, 100) == {tuple(p) for p in np.argwhere(~vol.background)}


def test_enumerate_cells():
    assert len(list(enumerate_cells(build_filtered_complex(cube_volume((1, 1, 1), 0)), 3))) == 1
    c = build_filtered_complex(cube_volume((2, 1, 1), 0))
    assert len(list(enumerate_cells(c, 2))) == 11
    with pytest.raises(ValidationError):
        list(enumerate_cells(c, 4))


def test_euler_examples():
    c = build_filtered_complex(cube_volume((1, 1, 1), 50))
    assert euler_characteristic(c, 50) == 1
    assert euler_characteristic(c, 49) == 0


def test_hollow_shell_euler_is_two():
    # b = (1, 0, 1) so the Euler characteristic of the shell is 2; brute
    # force over the materialized cells agrees.
    c = build_filtered_complex(hollow_shell())
    cells = oracle.filtration_bruteforce(hollow_shell())
    by_dim = np.bincount([sum(x % 2 for x in k) for k in cells], minlength=4)
    assert by_dim[0] - by_dim[1] + by_dim[2] - by_dim[3] == 2
    assert euler_characteristic(c, 100) == 2


def test_cell_counts_full_block():
    c = build_filtered_complex(cube_volume((3, 4, 2), 10))
    counts = cell_counts(c)
    assert counts[0] == 4 * 5 * 3
    assert sum(counts) == 7 * 9 * 5


def test_errors():
    with pytest.raises(ValidationError):
        build_filtered_complex(ScalarVolume(np.zeros((2, 2)), np.ones((2, 2), dtype=bool)))
    with pytest.raises(ValidationError):
        build_filtered_complex(cube_volume((1, 1, 1, 1), 0))


def test_cell_faces():
    cube = Cell((0, 0, 0), 0b111)
    assert len(cube.faces()) == 6
    assert all(f.dim == 2 for f in cube.faces())
    assert Cell.from_doubled(cube.doubled()) == cube
    assert Cell((2, 3), 0).faces() == []


@settings(max_examples=60, deadline=None)
@given(volumes())
def test_matches_bruteforce_filtration(vol):
    c = build_filtered_complex(vol)
    expected = oracle.filtration_bruteforce(vol)
    got = {}
    for dim in range(vol.ndim + 1):
        for cell, g, _ in enumerate_cells(c, dim):
            got[cell.doubled()] = g
    assert got == expected


@settings(max_examples=60, deadline=None)
@given(volumes())
def test_monotone_and_provenance(vol):
    c = build_filtered_complex(vol)
    f = np.where(vol.background, -1, vol.values)
    for dim in range(1, vol.ndim + 1):
        for cell, g, _ in enumerate_cells(c, dim):
            assert all(c.cell_value(face) <= g for face in cell.faces())
    for dim in range(vol.ndim + 1):
        for cell, g, prov in enumerate_cells(c, dim):
            # provenance is an incident non-background voxel attaining the min
            assert not vol.background[prov]
            assert 100 - f[prov] == g
            assert all(
                p == a if cell.extent >> i & 1 else a - 1 <= p <= a
                for i, (a, p) in enumerate(zip(cell.anchor, prov))
            )


@settings(max_examples=60, deadline=None)
@given(volumes(), st.integers(0, 100))
def test_sublevel_voxel_set(vol, t):
    c = build_filtered_complex(vol)
    expected = {tuple(p) for p in np.argwhere(~vol.background & (vol.values >= 100 - t))}
    assert sublevel_voxels(c, t) == expected


@settings(max_examples=40, deadline=None)
@given(volumes(), st.integers(0, 100))
def test_diagonal_connectivity(vol, t):
    # voxels sharing any cell are in one component of the sublevel complex
    from scipy import ndimage

    c = build_filtered_complex(vol)
    present = np.zeros(vol.shape, dtype=bool)
    for p in sublevel_voxels(c, t):
        present[p] = True
    _, n = ndimage.label(present, structure=np.ones((3,) * vol.ndim, dtype=bool))
    assert oracle.components_bruteforce(c, t) == n


def test_dump_order(tmp_path):
    c = build_filtered_complex(ScalarVolume(np.array([[10, 90]]), np.zeros((1, 2), dtype=bool)))
    path = tmp_path / "cells.csv"
    dump_cells_csv(c, path)
    rows = path.read_text().splitlines()
    assert rows[0].startswith("dim")
    dims = [int(r.split(",")[0]) for r in rows[1:]]
    assert dims == sorted(dims)
    assert len(rows) - 1 == sum(cell_counts(c))
