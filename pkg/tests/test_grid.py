import numpy as np
import pytest
from hypothesis import given, strategies as st

from cubedisp.errors import ValidationError
from cubedisp.grid import ScalarVolume, load_volume, neighbours, new_volume, save_volume


def test_new_volume_constant_fill():
    vol = new_volume((2, 2, 2), 0)
    assert vol.size == 8
    assert (vol.values == 0).all() and not vol.background.any()


def test_new_volume_pipeline_shape():
    assert new_volume((100, 100, 20), 0).size == 200000


@pytest.mark.parametrize("shape, fill", [((3,), 101), ((), 0), ((0, 2), 0), ((2,), -1)])
def test_new_volume_rejects(shape, fill):
    with pytest.raises(ValidationError):
        new_volume(shape, fill)


def test_set_get_round_trip():
    vol = new_volume((2, 2, 2), 0)
    vol.set((0, 0, 0), 57)
    assert vol.get((0, 0, 0)) == (57, False)


def test_background_query():
    vol = new_volume((2, 2, 2), 10)
    vol.set((1, 0, 1), None)
    assert vol.get((1, 0, 1))[1] is True


def test_get_out_of_bounds():
    vol = new_volume((100, 100, 20), 0)
    with pytest.raises(IndexError):
        vol.get((100, 0, 0))


def test_set_rejects_out_of_range():
    with pytest.raises(ValidationError):
        new_volume((2,), 0).set((0,), 150)


def test_constructor_validates_values():
    with pytest.raises(ValidationError):
        ScalarVolume(np.array([[5, 120]]), np.zeros((1, 2), dtype=bool))
    # out-of-range values under the mask are fine
    vol = ScalarVolume(np.array([[5, 120]]), np.array([[False, True]]))
    assert vol.get((0, 1)) == (0, True)


def test_neighbour_counts():
    assert len(neighbours((1, 1, 1), (3, 3, 3), "full")) == 26
    assert len(neighbours((0, 0, 0), (3, 3, 3), "face")) == 3
    # corner block 2x2x2 minus self
    assert len(neighbours((0, 0, 0), (3, 3, 3), "full")) == 7


def test_unknown_connectivity():
    with pytest.raises(ValueError):
        neighbours((0, 0), (2, 2), "diagonal")


shapes = st.lists(st.integers(1, 4), min_size=1, max_size=3).map(tuple)


@st.composite
def shape_and_two_coords(draw):
    shape = draw(shapes)
    p = tuple(draw(st.integers(0, n - 1)) for n in shape)
    q = tuple(draw(st.integers(0, n - 1)) for n in shape)
    return shape, p, q


@given(shape_and_two_coords(), st.sampled_from(["face", "full"]))
def test_neighbours_symmetric(args, conn):
    shape, p, q = args
    assert (q in neighbours(p, shape, conn)) == (p in neighbours(q, shape, conn))


@given(shape_and_two_coords())
def test_face_subset_of_full_and_no_duplicates(args):
    shape, p, _ = args
    face, full = neighbours(p, shape, "face"), neighbours(p, shape, "full")
    assert set(face) <= set(full)
    assert len(set(full)) == len(full)
    assert all(all(0 <= c < n for c, n in zip(q, shape)) for q in full)


@given(st.integers(1, 3))
def test_interior_counts(d):
    shape = (3,) * d
    centre = (1,) * d
    assert len(neighbours(centre, shape, "full")) == 3**d - 1
    assert len(neighbours(centre, shape, "face")) == 2 * d


def test_file_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    vol = ScalarVolume(rng.integers(0, 101, (3, 4, 5)), rng.random((3, 4, 5)) < 0.3)
    path = tmp_path / "v.grid"
    save_volume(vol, path)
    text = path.read_text().splitlines()
    assert text[0] == "shape=3,4,5"
    assert load_volume(path) == vol
    assert "-1" in " ".join(text[1:])


def test_load_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.grid"
    p.write_text("shape=2,2\n1 2 3\n")
    with pytest.raises(ValidationError, match="expected 4 values"):
        load_volume(p)
    p.write_text("2,2\n1 2\n3 4\n")
    with pytest.raises(ValidationError, match="shape="):
        load_volume(p)
    p.write_text("shape=1,2\n1 200\n")
    with pytest.raises(ValidationError, match="outside"):
        load_volume(p)
