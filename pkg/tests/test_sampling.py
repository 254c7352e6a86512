import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from relit import brdf
from relit.sampling import (
    build_onb,
    halton,
    halton2d,
    sample_cosine_hemisphere,
    sample_ggx_half_vector,
    texel_hash,
)


def radical_inverse_reference(index: int, base: int) -> float:
    """Independent digit-string oracle for the radical inverse."""
    digits = []
    while index > 0:
        digits.append(index % base)
        index //= base
    return sum(d * base ** -(i + 1) for i, d in enumerate(digits))


def test_halton_known_values():
    assert halton(1, 2) == 0.5
    assert halton(3, 2) == 0.75
    assert halton(2, 3) == pytest.approx(2.0 / 3.0, abs=1e-15)


@pytest.mark.parametrize("base", [2, 3])
def test_halton_first_16_match_reference(base):
    for i in range(16):
        assert halton(i, base) == pytest.approx(
            radical_inverse_reference(i, base), abs=1e-12
        ), f"index {i} base {base}"


def test_halton_vectorized_matches_scalar():
    idx = np.arange(100)
    vec2 = halton(idx, 2)
    vec3 = halton(idx, 3)
    for i in range(100):
        assert vec2[i] == halton(int(i), 2)
        assert vec3[i] == halton(int(i), 3)


@given(st.integers(min_value=0, max_value=2**31))
def test_halton_in_unit_interval(i):
    for base in (2, 3):
        v = float(halton(i, base))
        assert 0.0 <= v < 1.0


def test_halton2d_shape_and_determinism():
    a = halton2d(7, 16)
    b = halton2d(7, 16)
    assert a.shape == (16, 2)
    assert np.array_equal(a, b)
    offs = np.array([[1, 2], [3, 4]], dtype=np.uint64)
    grid = halton2d(offs, 8)
    assert grid.shape == (2, 2, 8, 2)
    assert np.array_equal(grid[0, 1], halton2d(2, 8))


def test_texel_hash_spreads_and_is_deterministic():
    a = texel_hash(np.arange(64)[None, :], np.arange(64)[:, None], seed=0)
    b = texel_hash(np.arange(64)[None, :], np.arange(64)[:, None], seed=0)
    assert np.array_equal(a, b)
    assert len(np.unique(a)) > 4000  # essentially no collisions on a 64x64 tile
    c = texel_hash(np.arange(64)[None, :], np.arange(64)[:, None], seed=1)
    assert not np.array_equal(a, c)


def test_onb_is_orthonormal(rng):
    n = rng.normal(size=(512, 3))
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    t, b = build_onb(n)
    assert np.abs(np.sum(t * n, axis=-1)).max() < 1e-9
    assert np.abs(np.sum(b * n, axis=-1)).max() < 1e-9
    assert np.abs(np.sum(t * b, axis=-1)).max() < 1e-9
    assert np.abs(np.linalg.norm(t, axis=-1) - 1).max() < 1e-9


def test_ggx_inverse_cdf_at_zero_returns_normal():
    n = np.array([0.3, -0.5, 0.8])
    n /= np.linalg.norm(n)
    for rough in (0.1, 0.5, 1.0):
        h, _ = sample_ggx_half_vector(np.array([0.0, 0.37]), rough, n)
        assert np.allclose(h, n, atol=1e-12)


def test_ggx_low_roughness_concentrates_at_normal():
    n = np.array([0.0, 0.0, 1.0])
    u = halton2d(0, 4096)
    u = u[u[:, 0] <= 0.99]
    h, _ = sample_ggx_half_vector(u, 0.01, n)
    angles = np.degrees(np.arccos(np.clip(h @ n, -1, 1)))
    assert angles.max() < 1.0


def test_ggx_samples_stay_in_hemisphere(rng):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    u = halton2d(123, 4096)
    h, pdf = sample_ggx_half_vector(u, 0.7, n)
    assert (h @ n >= 0).all()
    assert np.isfinite(pdf).all()
    assert np.abs(np.linalg.norm(h, axis=-1) - 1).max() < 1e-6


def _ggx_theta_bin_masses(roughness: float, edges: np.ndarray) -> np.ndarray:
    """Quadrature oracle: mass of D(h)(n.h) per theta bin over the hemisphere."""

    def integrand(theta):
        return (
            brdf.ndf_ggx(np.cos(theta), roughness)
            * np.cos(theta)
            * np.sin(theta)
            * 2.0
            * np.pi
        )

    masses = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, lo, hi)
        masses.append(val)
    return np.asarray(masses)


@pytest.mark.parametrize("roughness", [0.2, 0.5, 1.0])
def test_ggx_chi_square_against_quadrature(roughness):
    n = np.array([0.0, 0.0, 1.0])
    count = 100_000
    u = halton2d(0, count)
    h, _ = sample_ggx_half_vector(u, roughness, n)
    theta = np.arccos(np.clip(h[:, 2], -1, 1))

    edges = np.linspace(0.0, np.pi / 2, 33)
    expected = _ggx_theta_bin_masses(roughness, edges) * count
    observed, _ = np.histogram(theta, bins=edges)
    keep = expected >= 5.0
    # fold tail bins with tiny expectation into their neighbours
    chi2 = float(np.sum((observed[keep] - expected[keep]) ** 2 / expected[keep]))
    chi2 += float(
        (observed[~keep].sum() - expected[~keep].sum()) ** 2
        / max(expected[~keep].sum(), 1e-9)
    )
    dof = int(keep.sum())  # +1 folded bin -1 normalization
    p = stats.chi2.sf(chi2, dof)
    assert p > 0.01, f"chi2={chi2:.1f} dof={dof} p={p:.4f}"


@pytest.mark.parametrize("roughness", [0.1, 0.5, 1.0])
def test_ggx_pdf_integrates_to_one(roughness):
    def integrand(theta):
        return (
            brdf.ndf_ggx(np.cos(theta), roughness)
            * np.cos(theta)
            * np.sin(theta)
            * 2.0
            * np.pi
        )

    total, _ = integrate.quad(integrand, 0, np.pi / 2)
    assert total == pytest.approx(1.0, rel=0.01)


def test_ggx_pdf_field_matches_density_formula():
    n = np.array([0.0, 0.0, 1.0])
    u = halton2d(11, 1024)
    h, pdf = sample_ggx_half_vector(u, 0.4, n)
    expected = brdf.ndf_ggx(h[:, 2], 0.4) * h[:, 2]
    assert np.allclose(pdf, expected, rtol=1e-10)


def test_cosine_sample_at_origin_returns_normal():
    n = np.array([0.6, 0.0, 0.8])
    d, pdf = sample_cosine_hemisphere(np.array([0.0, 0.0]), n)
    assert np.allclose(d, n, atol=1e-12)
    assert pdf == pytest.approx(1.0 / np.pi)


def test_cosine_mean_is_two_thirds():
    n = np.array([0.0, 0.0, 1.0])
    u = halton2d(0, 100_000)
    d, _ = sample_cosine_hemisphere(u, n)
    assert (d @ n).mean() == pytest.approx(2.0 / 3.0, abs=0.01)


def test_cosine_pdf_is_cos_over_pi(rng):
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    u = halton2d(99, 2048)
    d, pdf = sample_cosine_hemisphere(u, n)
    assert np.allclose(pdf, (d @ n) / np.pi, atol=1e-9)
    assert (d @ n >= 0).all()
