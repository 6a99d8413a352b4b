import asyncio
import inspect
import os
from pathlib import Path

import numpy as np
import pytest


def pytest_configure(config):
    config.addinivalue_line("markers",
                            "asyncio: run the coroutine test on a fresh loop")


@pytest.hookimpl(tryfirst=True)
def pytest_pyfunc_call(pyfuncitem):
    # minimal asyncio support: run coroutine tests on their own event loop
    fn = pyfuncitem.obj
    if inspect.iscoroutinefunction(fn):
        kwargs = {name: pyfuncitem.funcargs[name]
                  for name in pyfuncitem._fixtureinfo.argnames}
        asyncio.run(fn(**kwargs))
        return True
    return None

from teleokin.config import load_config, load_robot_model
from teleokin.kinematics import JointSpec, Pose, RobotModel
from teleokin.quat import Quaternion, UnitQuaternion

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def default_model():
    return load_robot_model(CONFIG_DIR / "nine_dof_arm.yaml")


@pytest.fixture(scope="session")
def default_config():
    return load_config(CONFIG_DIR / "default.yaml")


def make_random_model(seed, prismatic_at=None, wide_limits=False):
    """A random but valid 9-joint chain; tests are parameterized over the
    geometry so nothing depends on the shipped numbers."""
    rng = np.random.default_rng(seed)
    joints = []
    for k in range(9):
        kind = "prismatic" if k == prismatic_at else "revolute"
        joints.append(JointSpec(
            a=rng.uniform(0.0, 0.25),
            alpha=rng.uniform(-np.pi, np.pi),
            d=rng.uniform(-0.25, 0.25),
            theta_offset=rng.uniform(-np.pi, np.pi),
            kind=kind))
    lim = 50.0 if wide_limits else np.pi
    axis = rng.standard_normal(3)
    base = Pose(UnitQuaternion.from_axis_angle(axis, rng.uniform(-2, 2)),
                Quaternion.pure(rng.uniform(-0.3, 0.3, 3)))
    return RobotModel(joints=joints,
                      q_min=-lim * np.ones(9), q_max=lim * np.ones(9),
                      base_pose=base,
                      shaft_joint_index=int(rng.integers(3, 9)),
                      shaft_length=0.2)


def random_unit_quat(rng):
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return UnitQuaternion(*v)


def random_config(rng, model):
    return rng.uniform(model.q_min, model.q_max)
