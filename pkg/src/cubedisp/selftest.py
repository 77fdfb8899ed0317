"""Randomized agreement check between the reduction and the brute-force oracle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle
from .grid import ScalarVolume
from .reduction import betti_at, compute_persistence
from .tconstruction import build_filtered_complex, euler_characteristic

FUZZ_VALUES = (0, 20, 40, 60, 80, 100)


@dataclass
class Mismatch:
    case: int
    shape: tuple
    t: int
    kind: str
    expected: object
    got: object


def random_volume(rng: np.random.Generator, max_shape, background_rate: float | None = None) -> ScalarVolume:
    """Random volume with entries from ``FUZZ_VALUES`` and random background, never all background."""
    shape = tuple(int(rng.integers(1, m + 1)) for m in max_shape)
    rate = rng.uniform(0.0, 0.4) if background_rate is None else background_rate
    while True:
        values = rng.choice(FUZZ_VALUES, size=shape)
        bg = rng.random(shape) < rate
        if not bg.all():
            return ScalarVolume(values, bg)


def check_volume(volume: ScalarVolume, backend: str | None = None, case: int = 0) -> list[Mismatch]:
    """Compare barcode Betti numbers and Euler characteristic with the oracle at every t in 0..100."""
    complex_ = build_filtered_complex(volume)
    barcode = compute_persistence(complex_, backend)
    out = []
    levels = sorted({int(v) for v in np.unique(complex_.g) if v >= 0})
    cache: dict[int, tuple] = {}
    for t in range(101):
        # the sublevel complex at t equals the one at the largest value <= t
        level = max((v for v in levels if v <= t), default=-1)
        if level not in cache:
            cache[level] = oracle.betti_bruteforce(complex_, t)
        expected = cache[level]
        got = betti_at(barcode, t)
        if got != expected:
            out.append(Mismatch(case, volume.shape, t, "betti", expected, got))
        chi = euler_characteristic(complex_, t)
        alt = got[0] - got[1] + got[2]
        if alt != chi:
            out.append(Mismatch(case, volume.shape, t, "euler", chi, alt))
    return out


def run(cases: int = 100, max_shape=(5, 5, 4), seed: int = 0, backend: str | None = None) -> list[Mismatch]:
    rng = np.random.default_rng(seed)
    mismatches = []
    for case in range(cases):
        mismatches.extend(check_volume(random_volume(rng, max_shape), backend, case))
    return mismatches
