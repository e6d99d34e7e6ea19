import numpy as np
import pytest

from nnkit.rng import make_rng
from sim.demos import gen_demos
from sim.env import EnvConfig
from trajcore.types import Dataset, Trajectory


def random_trajectory(rng, n, dim_p=2, dim_theta=0, action_dim=3, obs_dim=4, meta=None):
    """Random walk in p/theta with openings kept inside [0, 1]."""
    positions = np.cumsum(rng.normal(size=(n, dim_p)), axis=0)
    orientations = np.cumsum(rng.normal(size=(n, dim_theta)), axis=0) if dim_theta else None
    openings = rng.uniform(0.0, 1.0, size=n)
    return Trajectory(positions, orientations, openings,
                      rng.normal(size=(n, action_dim)), rng.normal(size=(n, obs_dim)),
                      meta or {})


def piecewise_trajectory(directions, lengths, action_dim=3, obs_dim=2):
    """Constant-velocity legs, one per (direction, length), constant opening."""
    points = [np.zeros(2)]
    for direction, length in zip(directions, lengths):
        for _ in range(length):
            points.append(points[-1] + np.asarray(direction, dtype=np.float64))
    n = len(points)
    return Trajectory(np.array(points), None, np.full(n, 0.5), np.zeros((n, action_dim)),
                      np.zeros((n, obs_dim)))


@pytest.fixture
def rng():
    return make_rng(1234, "tests")


@pytest.fixture
def env_cfg():
    return EnvConfig()


@pytest.fixture
def rotate_cfg():
    return EnvConfig(task="rotate")


@pytest.fixture(scope="session")
def small_demos():
    """A handful of translate-task expert demonstrations shared across tests."""
    return gen_demos(EnvConfig(), 6, seed=0)


@pytest.fixture
def tiny_dataset(rng):
    trajectories = [random_trajectory(rng, n, obs_dim=5) for n in (6, 8, 7)]
    return Dataset.from_trajectories(trajectories)
