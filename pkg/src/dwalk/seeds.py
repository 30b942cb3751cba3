"""Deterministic RNG derivation.

Every random draw in the package comes from a PCG64 generator keyed by a
64-bit master seed plus an integer derivation path, so any run, experiment
row, or walk is independently reproducible from (master_seed, path).
The derivation is ``SeedSequence(entropy=master_seed, spawn_key=path)``,
e.g. an experiment run uses path = (point_index, run_index).
"""

from __future__ import annotations

import numpy as np


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(master_seed: int, *path: int) -> int:
    """Collapse (master_seed, path) to a single 64-bit child seed, so that a
    derived task can be recorded and replayed from one integer."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def seed_fingerprint(master_seed: int, *path: int) -> str:
    """Stable textual form of a derived seed, recorded in output artifacts."""
    if path:
        return f"pcg64:{int(master_seed)}/" + ".".join(str(int(p)) for p in path)
    return f"pcg64:{int(master_seed)}"
