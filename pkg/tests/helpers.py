"""Shared test utilities: randomized but reproducible four-level parameter sets."""

import warnings

import numpy as np

from eitswitch import atom


def random_gapped_sets(n_sets, seed, min_gap=0.25):
    """Seeded (DriveSet, LevelScheme) pairs with a safely gapped Liouvillian.

    Rates and Rabi frequencies are drawn in [0.1, 3] units of gamma_21 = 1,
    detunings in [-3, 3].  Candidates whose second-slowest Liouvillian
    eigenvalue decays slower than ``min_gap`` are rejected so that a
    t = 100 / gamma_21 integration provably settles far below the 1e-8
    comparison tolerance.  Degenerate candidates are rejected the same way.
    """
    rng = np.random.default_rng(seed)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while len(out) < n_sets:
            drives = atom.DriveSet(
                omega_1=rng.uniform(0.1, 3.0),
                omega_2=rng.uniform(0.1, 3.0),
                omega_c=rng.uniform(0.1, 3.0),
                delta_1=rng.uniform(-3.0, 3.0),
                delta_2=rng.uniform(-3.0, 3.0),
                delta_c=rng.uniform(-3.0, 3.0),
            )
            scheme = atom.LevelScheme(
                gamma_21=1.0,
                gamma_23=rng.uniform(0.1, 3.0),
                gamma_43=rng.uniform(0.1, 3.0),
                gamma_gg=rng.uniform(0.1, 3.0),
            )
            liou = atom.build_liouvillian(drives, scheme)
            decay = np.sort(np.linalg.eigvals(liou).real)[::-1]
            if abs(decay[0]) > 1e-9 or -decay[1] < min_gap:
                continue
            out.append((drives, scheme))
    return out
