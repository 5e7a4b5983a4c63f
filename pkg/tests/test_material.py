import math

import numpy as np
import pytest
from scipy import stats

from cinevol.errors import InvalidArgument
from cinevol.kernel import impl as _k
from cinevol.material import (
    Material, albedo, eval_brdf, pdf_brdf, pdf_integral, sample_brdf,
    sampled_albedo,
)

N = np.array([0.0, 0.0, 1.0])


def _rand_dir_hemi(rng, count):
    d = rng.normal(size=(count, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    d[:, 2] = np.abs(d[:, 2])
    d[:, 2] = np.maximum(d[:, 2], 1e-4)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def test_parameter_validation():
    with pytest.raises(InvalidArgument):
        Material(metallic=1.5)
    with pytest.raises(InvalidArgument):
        Material(base_color=(1.2, 0, 0))


# --- evaluation --------------------------------------------------------------

def test_mirror_peak_decreases_with_roughness():
    wo = np.array([0.5, 0.0, math.sqrt(0.75)])
    wi = np.array([-0.5, 0.0, math.sqrt(0.75)])  # mirror of wo about N
    peaks = []
    for r in (0.0, 0.5, 1.0):
        m = Material(metallic=0.5, specular=0.5, roughness=r)
        peaks.append(float(eval_brdf(m, wo, wi, N).max()))
    assert peaks[0] > peaks[1] > peaks[2]


def test_reciprocity(rng):
    for mat in (Material(), Material(metallic=1.0, roughness=0.2),
                Material(base_color=(0.9, 0.3, 0.1), specular=0.8)):
        wo = _rand_dir_hemi(rng, 1000)
        wi = _rand_dir_hemi(rng, 1000)
        for a, b in zip(wo, wi):
            f_ab = eval_brdf(mat, a, b, N)
            f_ba = eval_brdf(mat, b, a, N)
            denom = np.maximum(np.abs(f_ab), 1e-12)
            assert np.max(np.abs(f_ab - f_ba) / denom) < 1e-5


def test_below_hemisphere_is_zero():
    m = Material()
    wo = np.array([0.0, 0.0, 1.0])
    wi = np.array([0.3, 0.1, -0.7])
    wi /= np.linalg.norm(wi)
    assert np.all(eval_brdf(m, wo, wi, N) == 0.0)
    assert pdf_brdf(m, wo, wi, N) == 0.0


def test_white_furnace_albedo():
    m = Material(base_color=(1, 1, 1), metallic=0.0, roughness=1.0)
    wo = np.array([0.0, 0.0, 1.0])
    a = albedo(m, wo, N, nsamples=1_000_000)
    assert np.all(a <= 1.0 + 1e-2)
    # rough white diffuse should also be close to energy-preserving
    assert np.all(a > 0.8)


# --- sampling ----------------------------------------------------------------

def test_smooth_metal_samples_mirror_direction(rng):
    m = Material(metallic=1.0, roughness=0.0, specular=0.5)
    for _ in range(20):
        wo = _rand_dir_hemi(rng, 1)[0]
        wo[2] = max(wo[2], 0.1)  # VNDF visibility skews at extreme grazing
        wo /= np.linalg.norm(wo)
        mirror = 2.0 * wo[2] * N - wo
        # the clamped GGX width (1e-3) leaves a sliver of spread; drive
        # the radial uniform toward 0 to probe the delta limit itself
        s = sample_brdf(m, wo, N, (1e-6, rng.uniform()), rng.uniform())
        assert s is not None
        assert np.max(np.abs(s.wi - mirror)) < 1e-4


def test_cosine_lobe_chi_square(rng):
    m = Material(metallic=0.0, specular=0.0)
    wo = np.array([0.3, 0.2, 0.9])
    wo /= np.linalg.norm(wo)
    count = 100_000
    wi = np.empty((count, 3))
    u = rng.uniform(size=(count, 2))
    lu = rng.uniform(size=count)
    for i in range(count):
        s = sample_brdf(m, wo, N, u[i], lu[i])
        wi[i] = s.wi
    # for pdf = cos(theta)/pi, sin^2(theta) and phi/2pi are iid uniform
    s2 = np.clip(1.0 - wi[:, 2] ** 2, 0.0, 1.0)
    phi = (np.arctan2(wi[:, 1], wi[:, 0]) / (2 * np.pi)) % 1.0
    bins = 8
    hist, _, _ = np.histogram2d(s2, phi, bins=bins, range=[[0, 1], [0, 1]])
    chi2, p = stats.chisquare(hist.reshape(-1))
    assert p > 0.01, (chi2, p)


def test_pdf_self_consistency(rng):
    m = Material(base_color=(0.8, 0.8, 0.8), metallic=0.5,
                 roughness=0.5, specular=0.5)
    for _ in range(200):
        wo = _rand_dir_hemi(rng, 1)[0]
        s = sample_brdf(m, wo, N, rng.uniform(size=2), rng.uniform())
        if s is None:
            continue
        pdf = pdf_brdf(m, wo, s.wi, N)
        assert pdf == pytest.approx(s.pdf, rel=1e-5)


def test_cosine_lobe_pdf_is_analytic(rng):
    m = Material(metallic=0.0, specular=0.0)
    wo = np.array([0.0, 0.0, 1.0])
    for wi in _rand_dir_hemi(rng, 50):
        assert pdf_brdf(m, wo, wi, N) == pytest.approx(
            wi[2] / math.pi, abs=1e-6)


def test_pdf_integrates_to_one():
    m = Material(base_color=(0.8, 0.8, 0.8), metallic=0.5,
                 roughness=0.5, specular=0.5)
    wo = np.array([0.4, 0.0, math.sqrt(1 - 0.16)])
    total = pdf_integral(m, wo, N, nsamples=1_000_000)
    assert 0.95 <= total <= 1.01


def test_sampled_albedo_matches_uniform_albedo():
    m = Material(base_color=(0.7, 0.6, 0.5), roughness=0.6, specular=0.5)
    wo = np.array([0.2, -0.3, 0.93])
    wo /= np.linalg.norm(wo)
    a = albedo(m, wo, N, nsamples=400_000)
    b = sampled_albedo(m, wo, N, nsamples=400_000)
    assert np.max(np.abs(a - b)) < 0.01


def test_energy_bounded_on_material_grid():
    # coarse grid over the parameter space, near-normal viewing
    wo = np.array([0.3, 0.0, math.sqrt(1 - 0.09)])
    for metallic in (0.0, 0.5, 1.0):
        for roughness in (0.3, 0.65, 1.0):
            for specular in (0.0, 0.5, 1.0):
                m = Material(base_color=(1, 1, 1), metallic=metallic,
                             roughness=roughness, specular=specular)
                a = albedo(m, wo, N, nsamples=200_000)
                assert np.all(a <= 1.01), (metallic, roughness, specular, a)
