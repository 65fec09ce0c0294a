"""Dataset generators shared by the test modules."""

import numpy as np

from revpref import core
from revpref.core import ChoiceDataset
from revpref.oracle import random_dataset


def random_datasets(count, seed, max_n=6, max_menus=10):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(3, max_n + 1))
        out.append(random_dataset(n, rng, 1, min(max_menus, 2**n - n - 1)))
    return out


def pure_sarp_dataset(rng, n):
    """A dataset with a SARP cycle of length at least three and no WARP pair.

    Starts from a doubleton cycle and adds random menus, keeping each one only
    if it creates no WARP pair.
    """
    length = int(rng.integers(3, n + 1))
    cyc = [int(v) for v in rng.permutation(n)[:length]]
    obs = [(frozenset({cyc[i], cyc[(i + 1) % length]}), cyc[i]) for i in range(length)]
    seen = {b for b, _ in obs}
    for _ in range(int(rng.integers(0, 6))):
        size = int(rng.integers(2, n + 1))
        b = frozenset(int(v) for v in rng.choice(n, size=size, replace=False))
        if b in seen:
            continue
        trial = obs + [(b, int(rng.choice(sorted(b))))]
        if not core.find_warp_pairs(ChoiceDataset.build(trial, n=n)):
            obs, seen = trial, seen | {b}
    d = ChoiceDataset.build(obs, n=n)
    assert core.has_sarp_violation(d)[0] and not core.find_warp_pairs(d)
    return d
