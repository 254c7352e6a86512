import numpy as np
import pytest

from relit import fixtures, prefilter


@pytest.fixture(scope="session")
def dfg_lut():
    return prefilter.build_dfg_lut(resolution=64, sample_count=512, seed=0)


@pytest.fixture(scope="session")
def three_spheres():
    return fixtures.make_sphere_bundle("three-spheres", res=128)[0]


@pytest.fixture(scope="session")
def constant_env():
    return fixtures.make_probe("constant", 64, 1.0)


@pytest.fixture(scope="session")
def studio_env():
    return fixtures.make_probe("studio", 128, 1.0)


@pytest.fixture(scope="session")
def constant_pyramid(constant_env):
    cfg = prefilter.PrefilterConfig(mode="optimization", base_resolution=64, threads=1)
    return prefilter.prefilter_specular(constant_env, cfg)


@pytest.fixture(scope="session")
def studio_pyramid(studio_env):
    cfg = prefilter.PrefilterConfig(mode="relight", base_resolution=128, threads=1)
    return prefilter.prefilter_specular(studio_env, cfg)


def sphere_buffer(res=64, roughness=0.5, metallic=0.0, albedo=(0.75, 0.75, 0.75)):
    return fixtures.make_sphere_bundle(
        "sphere", res=res, material=(roughness, metallic), albedo=albedo
    )[0]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
