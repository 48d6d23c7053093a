import numpy as np
import pytest

from nphbench import SurvivalDataset


def make_dataset(times1, events1, times2, events2) -> SurvivalDataset:
    t = np.concatenate([np.asarray(times1, float), np.asarray(times2, float)])
    e = np.concatenate([np.asarray(events1, bool), np.asarray(events2, bool)])
    g = np.array([1] * len(times1) + [2] * len(times2))
    return SurvivalDataset(t, e, g)


def random_dataset(rng, n1=None, n2=None, censor=0.3, scale=5.0) -> SurvivalDataset:
    """Small random two-sample dataset with roughly the given censoring."""
    n1 = n1 if n1 is not None else int(rng.integers(2, 9))
    n2 = n2 if n2 is not None else int(rng.integers(2, 9))
    n = n1 + n2
    t = rng.exponential(scale, n)
    if censor > 0:
        c = rng.exponential(scale * (1 - censor) / censor, n)
        e = t <= c
        t = np.minimum(t, c)
    else:
        e = np.ones(n, dtype=bool)
    if not e.any():
        e[int(rng.integers(0, n))] = True
    return SurvivalDataset(t, e, np.array([1] * n1 + [2] * n2))


def swap_labels(data: SurvivalDataset) -> SurvivalDataset:
    return data.with_groups(np.where(data.group == 1, 2, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
