import numpy as np
import pytest

from pflsafe import (body_table_path, load_body_table, load_robot_model,
                     robot_model_path)


@pytest.fixture(scope="session")
def body_table():
    return load_body_table(body_table_path())


@pytest.fixture(scope="session")
def panda():
    return load_robot_model(robot_model_path())


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_joint_configs(model, rng, n):
    """n uniformly drawn in-limit joint vectors, (n, dof)."""
    lower = np.where(np.isfinite(model.lower_limits), model.lower_limits, -np.pi)
    upper = np.where(np.isfinite(model.upper_limits), model.upper_limits, np.pi)
    return lower + (upper - lower) * rng.random((n, model.n))
