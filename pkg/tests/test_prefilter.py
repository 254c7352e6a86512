import numpy as np
import pytest

from relit import envmap as em
from relit import fixtures
from relit.brdf import fresnel_schlick, geometry_smith_ggx, ndf_ggx
from relit.prefilter import (
    OPTIMIZATION_SCHEDULE,
    RELIGHT_SCHEDULE,
    PrefilterConfig,
    build_dfg_lut,
    multiscatter_terms,
    prefilter_diffuse,
    prefilter_specular,
)


def dfg_reference(n_dot_v, roughness, samples=1_000_000, seed=7):
    """Independent brute-force (scale, bias): uniform hemisphere sampling of
    the split Cook-Torrance integrand, no shared code with the LUT path."""
    rng = np.random.default_rng(seed)
    # uniform directions over the hemisphere via z = u, phi = 2 pi v
    z = rng.random(samples)
    phi = 2 * np.pi * rng.random(samples)
    s = np.sqrt(1 - z * z)
    l = np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)
    v = np.array([np.sqrt(1 - n_dot_v**2), 0.0, n_dot_v])
    h = l + v
    h /= np.linalg.norm(h, axis=-1, keepdims=True)
    n_dot_h = np.clip(h[:, 2], 0, 1)
    v_dot_h = np.clip(h @ v, 0, 1)
    d = ndf_ggx(n_dot_h, roughness)
    g = geometry_smith_ggx(n_dot_v, np.clip(l[:, 2], 1e-8, 1), roughness)
    # spec BRDF with F factored out: D G / (4 nv nl); times nl cos term
    core = d * g / (4 * n_dot_v * np.clip(l[:, 2], 1e-8, 1)) * l[:, 2]
    fc = (1 - v_dot_h) ** 5
    pdf = 1.0 / (2 * np.pi)  # uniform hemisphere
    scale = np.mean((1 - fc) * core) / pdf
    bias = np.mean(fc * core) / pdf
    return scale, bias


def test_dfg_entry_against_brute_force(dfg_lut):
    got = dfg_lut.lookup(0.7, 0.5)
    want_scale, want_bias = dfg_reference(0.7, 0.5)
    assert got[0] == pytest.approx(want_scale, rel=0.01)
    assert got[1] == pytest.approx(want_bias, rel=0.05, abs=5e-4)


def test_dfg_mirror_limit(dfg_lut):
    scale, bias = dfg_lut.lookup(1.0, 0.0)
    assert scale > 0.97
    assert bias < 0.03


def test_dfg_energy_bound(dfg_lut):
    total = dfg_lut.entries[..., 0] + dfg_lut.entries[..., 1]
    assert total.max() <= 1.001
    assert (dfg_lut.entries >= 0).all()


def test_dfg_determinism():
    a = build_dfg_lut(resolution=16, sample_count=64, seed=3)
    b = build_dfg_lut(resolution=16, sample_count=64, seed=3)
    assert np.array_equal(a.entries, b.entries)


def test_dfg_validates_arguments():
    with pytest.raises(ValueError):
        build_dfg_lut(resolution=8)
    with pytest.raises(ValueError):
        build_dfg_lut(sample_count=32)


def test_schedule_conformance_optimization(constant_pyramid):
    pyr = constant_pyramid
    assert pyr.num_levels == 5
    assert pyr.samples_per_level == OPTIMIZATION_SCHEDULE == (0, 4, 16, 24, 24)
    assert pyr.samples_per_level[0] == 0  # mirror level is an exact copy


def test_schedule_conformance_relight(studio_pyramid):
    assert studio_pyramid.num_levels == 8
    assert studio_pyramid.samples_per_level == RELIGHT_SCHEDULE
    assert max(studio_pyramid.samples_per_level) <= 256
    assert all(np.diff(studio_pyramid.samples_per_level) >= 0)


def test_level_zero_is_exact_copy(studio_env, studio_pyramid):
    assert np.array_equal(studio_pyramid.specular_levels[0].pixels, studio_env.pixels)


def test_constant_env_prefilters_to_constant(constant_pyramid):
    for level in constant_pyramid.specular_levels:
        assert np.allclose(level.pixels, 1.0, atol=1e-4)
    assert np.allclose(constant_pyramid.diffuse.pixels, 1.0, atol=0.02)


def test_resolutions_halve(studio_pyramid):
    res = [lv.width for lv in studio_pyramid.specular_levels]
    assert res == [128 >> l for l in range(8)]


def test_prefilter_determinism(studio_env):
    cfg = PrefilterConfig(mode="optimization", base_resolution=64, seed=5)
    a = prefilter_specular(studio_env, cfg)
    b = prefilter_specular(studio_env, cfg)
    for la, lb in zip(a.specular_levels, b.specular_levels):
        assert np.array_equal(la.pixels, lb.pixels)
    assert np.array_equal(a.diffuse.pixels, b.diffuse.pixels)


def test_prefilter_thread_count_invariance(studio_env):
    a = prefilter_specular(
        studio_env, PrefilterConfig(mode="optimization", base_resolution=64, threads=1)
    )
    b = prefilter_specular(
        studio_env, PrefilterConfig(mode="optimization", base_resolution=64, threads=8)
    )
    for la, lb in zip(a.specular_levels, b.specular_levels):
        assert np.array_equal(la.pixels, lb.pixels)
    assert np.array_equal(a.diffuse.pixels, b.diffuse.pixels)


def test_prefilter_linearity(studio_env):
    cfg = PrefilterConfig(mode="optimization", base_resolution=64, seed=2)
    one = prefilter_specular(studio_env, cfg)
    scaled = prefilter_specular(
        em.EnvironmentMap(studio_env.layout, studio_env.pixels * 3.0), cfg
    )
    for la, lb in zip(one.specular_levels, scaled.specular_levels):
        assert np.allclose(lb.pixels, 3.0 * la.pixels, rtol=1e-5, atol=1e-5)


def test_prefilter_rejects_bad_env():
    pix = np.ones((32, 32, 3), dtype=np.float32)
    pix[3, 3] = np.inf
    with pytest.raises(ValueError):
        em.EnvironmentMap(em.OCTAHEDRAL, pix)


def _lobe_stats(level_map, axis):
    """Peak direction and angular FWHM of a filtered bright-spot lobe."""
    pix = level_map.pixels[..., 0]
    dirs = level_map.texel_directions()
    peak_idx = np.unravel_index(np.argmax(pix), pix.shape)
    peak_dir = dirs[peak_idx]
    half = pix.max() / 2.0
    above = pix >= half
    ang = np.degrees(
        np.arccos(np.clip(np.sum(dirs[above] * axis, axis=-1), -1, 1))
    )
    return peak_dir, 2.0 * ang.max()


def test_bright_texel_lobe_grows_and_stays_centered():
    res = 128
    pix = np.full((res, res, 3), 1e-6, dtype=np.float32)
    axis_uv = np.array([0.30078125 + 0.5 / res, 0.19921875 + 0.5 / res])
    iy, ix = int(axis_uv[1] * res), int(axis_uv[0] * res)
    pix[iy, ix] = 200.0
    env = em.EnvironmentMap(em.OCTAHEDRAL, pix)
    axis = em.uv_to_dir(em.OCTAHEDRAL, np.array([(ix + 0.5) / res, (iy + 0.5) / res]))

    cfg = PrefilterConfig(mode="relight", base_resolution=128, seed=0, threads=1)
    pyr = prefilter_specular(env, cfg)
    widths = []
    for level in range(1, 5):
        peak_dir, fwhm = _lobe_stats(pyr.specular_levels[level], axis)
        texel_pitch = np.degrees(
            np.sqrt(4 * np.pi / pyr.specular_levels[level].pixels[..., 0].size)
        )
        off = np.degrees(np.arccos(np.clip(peak_dir @ axis, -1, 1)))
        assert off <= 1.5 * texel_pitch, f"level {level} peak drifted {off:.2f} deg"
        widths.append(fwhm)
    assert widths == sorted(widths), f"lobe widths not monotone: {widths}"
    assert widths[-1] > 2.0 * widths[0]


def test_diffuse_default_resolution(studio_env):
    out = prefilter_diffuse(studio_env, PrefilterConfig())
    assert out.pixels.shape == (32, 32, 3)


def test_diffuse_hemisphere_split():
    # upper hemisphere radiance 1, lower 0: irradiance/pi is 1 at the pole
    # and 0.5 at the equator (analytic cosine integral of a half-lit sky)
    res = 64
    uu, vv = np.meshgrid((np.arange(res) + 0.5) / res, (np.arange(res) + 0.5) / res)
    dirs = em.uv_to_dir(em.OCTAHEDRAL, np.stack([uu, vv], axis=-1))
    pix = np.repeat(
        np.where((dirs[..., 2] > 0)[..., None], 1.0, 0.0), 3, axis=-1
    ).astype(np.float32)
    env = em.EnvironmentMap(em.OCTAHEDRAL, pix)
    out = prefilter_diffuse(env, PrefilterConfig(diffuse_resolution=16, threads=1))

    d_out = out.texel_directions()
    pole = np.unravel_index(np.argmax(d_out[..., 2]), d_out[..., 2].shape)
    assert out.pixels[pole].mean() == pytest.approx(1.0, abs=0.1)
    equator = np.abs(d_out[..., 2]) < 0.15
    assert out.pixels[equator].mean() == pytest.approx(0.5, abs=0.1)


def test_rotation_equivariance_report(capsys):
    """Rotating the environment then prefiltering should match prefiltering
    then rotating the lookup, up to filtered-importance-sampling bias.
    Reported (printed), not hard-failed; the lobe peak is compared at 3%."""
    res = 128
    rot = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])  # 90 deg z
    axis = np.array([0.45, 0.2, 0.87])
    axis /= np.linalg.norm(axis)

    def spot_env(direction):
        uu, vv = np.meshgrid((np.arange(res) + 0.5) / res, (np.arange(res) + 0.5) / res)
        dirs = em.uv_to_dir(em.OCTAHEDRAL, np.stack([uu, vv], axis=-1))
        cos = np.clip(dirs @ direction, -1, 1)
        blob = np.exp((cos - 1.0) / (1.0 - np.cos(np.radians(10.0))))
        pix = 0.2 + 8.0 * blob[..., None] * np.ones(3)
        return em.EnvironmentMap(em.OCTAHEDRAL, pix.astype(np.float32))

    cfg = PrefilterConfig(mode="optimization", base_resolution=res, seed=0, threads=1)
    pyr = prefilter_specular(spot_env(axis), cfg)
    pyr_rot = prefilter_specular(spot_env(rot @ axis), cfg)

    # probe the finest filtered level, where the lobe is actually resolved;
    # coarser levels are dominated by chart quantization, not FIS bias
    lines = []
    for level in (1, 2):
        direct = float(pyr.specular_levels[level].sample(axis).max())
        rotated = float(pyr_rot.specular_levels[level].sample(rot @ axis).max())
        rel = abs(direct - rotated) / max(direct, 1e-9)
        lines.append((level, direct, rotated, rel))
    for level, direct, rotated, rel in lines:
        print(
            f"rotation equivariance level {level}: lobe peak {direct:.4f} vs "
            f"rotated {rotated:.4f} (rel dev {rel * 100:.2f}%, tolerance 3%) "
            f"{'OK' if rel < 0.03 else 'EXCEEDED (reported, not failed)'}"
        )
    assert all(direct > 0 and rotated > 0 for _, direct, rotated, _ in lines)


def test_multiscatter_identities():
    fss, ems, fms = multiscatter_terms(np.array([0.5, 0.5, 0.5]), 0.6, 0.4)
    assert ems == pytest.approx(0.0)
    assert np.allclose(fms * ems, 0.0)
    fss, ems, fms = multiscatter_terms(np.zeros(3), 0.7, 0.1)
    assert np.allclose(fss, 0.1)  # f0 = 0 leaves only the bias
    fss, ems, fms = multiscatter_terms(np.ones(3), 0.6, 0.2)
    # F0 = 1: FssEss + Fms Ems telescopes to exactly 1
    assert np.allclose(fss + fms * ems, 1.0)
