"""Shared fixtures: the reference plant, its design, and cached runs.

The two closed-loop trajectories (servo run and stabilization run) are
expensive enough to share; they are session scoped and every consumer
treats them as read only.
"""

import numpy as np
import pytest

from delaypi import (
    PlantParams,
    Scenario,
    SeparableField,
    Sinusoid,
    SpaceProfile,
    build_basis,
    design_feedback,
    run,
)
from delaypi.cli import RunConfig, load_config, scenario_from_config


@pytest.fixture(scope="session")
def ref_params() -> PlantParams:
    return PlantParams(a=0.2, b=2.0, c=1.0, theta=np.pi / 3, h_m=0.5, h_M=1.5)


@pytest.fixture(scope="session")
def basis40(ref_params):
    return build_basis(ref_params, 40)


@pytest.fixture(scope="session")
def basis80(ref_params):
    return build_basis(ref_params, 80)


@pytest.fixture(scope="session")
def ref_design(ref_params, basis40):
    return design_feedback(ref_params, basis=basis40)


@pytest.fixture(scope="session")
def ref_phi():
    """10 cos(3 pi tau) x (1-x)^2 on the history window."""
    return SeparableField(
        time=Sinusoid(offset=0.0, amplitude=10.0, omega=3.0 * np.pi,
                      phase=0.5 * np.pi),
        space=SpaceProfile(kind="poly_bump", scale=1.0),
    )


@pytest.fixture(scope="session")
def servo_traj():
    """The full 50 s servo scenario (time-varying delay, moving p and r)."""
    scn = scenario_from_config(load_config(RunConfig(preset="fig1")))
    return run(scn)


@pytest.fixture(scope="session")
def stabilization_traj():
    """Pure stabilization: r = p = 0, 10 s horizon."""
    scn = scenario_from_config(load_config(RunConfig(preset="stabilization_only")))
    return run(scn)


@pytest.fixture(scope="session")
def stabilization_scenario():
    return scenario_from_config(load_config(RunConfig(preset="stabilization_only")))


def make_stab_scenario(design, phi, *, t_end=10.0, dt=1e-3, **kw) -> Scenario:
    """Stabilization scenario (r = p = 0, constant unit delay) around phi."""
    from delaypi import Constant

    return Scenario(design=design, h=Constant(1.0), r=Constant(0.0),
                    p=Constant(0.0), phi=phi, t_end=t_end, dt=dt, **kw)
