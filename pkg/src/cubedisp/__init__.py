"""Cubical persistent homology of grayscale volumes, with a pipeline that
turns yearly origin-destination mobility tables into group-share volumes and
traces their topological features back to neighbourhoods and years."""

from ._backend import NAME as BACKEND
from .grid import ScalarVolume, load_volume, neighbours, new_volume, save_volume
from .reduction import Barcode, PersistenceFeature, betti_at, compute_persistence, diagram_points
from .tconstruction import (
    Cell,
    FilteredComplex,
    build_filtered_complex,
    enumerate_cells,
    euler_characteristic,
    sublevel_voxels,
)

__version__ = "0.1.0"
