"""Disney-style principled BRDF: evaluation, sampling, and pdfs.

The model exposes the four artist parameters used for shading gradient
surfaces inside the volume: base color, metallic, roughness, specular.
Evaluation and sampling are delegated to the render kernel so the public
API and the path tracer share one implementation.

Model summary
-------------
* Diffuse: Lambert times the Burley retro-reflection factor, renormalized
  so the normal-incidence albedo is exactly 1, and scaled by the energy
  not claimed by the specular layer (1 - average Fresnel).
* Specular: GGX (alpha = roughness^2, clamped to 1e-3) with
  height-correlated Smith visibility and Schlick Fresnel;
  F0 = lerp(0.08 * specular, base_color, metallic).  The grazing term
  F90 = min(1, 50 * luminance(F0)) fades out for vanishing F0, so
  specular = 0 with metallic = 0 has no specular lobe at all.
* Sampling: mixture of a cosine-weighted diffuse lobe and a GGX-VNDF
  specular lobe, weighted by approximate lobe albedos.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from cinevol.errors import InvalidArgument
from cinevol.kernel import impl as _k

ALPHA_MIN = 1e-3


def _scratch():
    return np.zeros((1, 48), dtype=np.float64), np.zeros((1, 2), dtype=np.int64)


@dataclass(frozen=True)
class Material:
    """Immutable shading parameters; all components in [0, 1]."""

    base_color: tuple[float, float, float] = (0.8, 0.8, 0.8)
    metallic: float = 0.0
    roughness: float = 0.5
    specular: float = 0.5

    def __post_init__(self):
        bc = tuple(float(c) for c in self.base_color)
        if len(bc) != 3 or any(not (0.0 <= c <= 1.0) for c in bc):
            raise InvalidArgument(f"base_color {self.base_color} outside [0,1]^3")
        for name in ("metallic", "roughness", "specular"):
            v = float(getattr(self, name))
            if not (0.0 <= v <= 1.0):
                raise InvalidArgument(f"{name}={v} outside [0, 1]")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "base_color", bc)


@dataclass(frozen=True)
class BsdfSample:
    """An importance-sampled incoming direction with its mixture pdf."""

    wi: np.ndarray = field(repr=False)
    pdf: float
    weight: np.ndarray = field(repr=False)  # f * |cos| / pdf


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise InvalidArgument("zero-length direction")
    return v / n


def eval_brdf(m: Material, wo, wi, n) -> np.ndarray:
    """BRDF value (per steradian); zero outside the reflection hemisphere."""
    wrk, _ = _scratch()
    out = _k.brdf_eval_one(
        m.base_color, m.metallic, m.roughness, m.specular,
        _unit(wo), _unit(wi), _unit(n), wrk,
    )
    return np.asarray(out, dtype=np.float64)


def pdf_brdf(m: Material, wo, wi, n) -> float:
    """Solid-angle pdf of sample_brdf for the given direction pair."""
    return float(
        _k.brdf_pdf_one(
            m.base_color, m.metallic, m.roughness, m.specular,
            _unit(wo), _unit(wi), _unit(n),
        )
    )


def sample_brdf(m: Material, wo, n, u, lobe_u: float) -> BsdfSample | None:
    """Sample an incoming direction; None for degenerate samples.

    ``u`` supplies the 2D lobe-internal uniforms, ``lobe_u`` selects the
    diffuse or specular lobe.  The returned pdf is the full mixture pdf.
    """
    wo = _unit(wo)
    n = _unit(n)
    wrk, _ = _scratch()
    wi, pdf = _k.brdf_sample_one(
        m.base_color, m.metallic, m.roughness, m.specular,
        wo, n, float(u[0]), float(u[1]), float(lobe_u), wrk,
    )
    if wi is None or pdf <= 1e-12:
        return None
    wi = np.asarray(wi, dtype=np.float64)
    f = eval_brdf(m, wo, wi, n)
    cos_i = float(np.dot(wi, n))
    return BsdfSample(wi, float(pdf), f * cos_i / pdf)


def albedo(m: Material, wo, n, nsamples: int = 100_000,
           seed: int = 0) -> np.ndarray:
    """Directional-hemispherical albedo by uniform-hemisphere Monte Carlo."""
    wo = _unit(wo)
    n = _unit(n)
    out = np.zeros(3, dtype=np.float64)
    wrk, ctr = _scratch()
    _k.brdf_albedo(
        out, *m.base_color, m.metallic, m.roughness, m.specular,
        wo[0], wo[1], wo[2], n[0], n[1], n[2], int(nsamples), int(seed),
        wrk, ctr,
    )
    return out


def pdf_integral(m: Material, wo, n, nsamples: int = 100_000,
                 seed: int = 0) -> float:
    """Monte Carlo estimate of the sample pdf's hemisphere integral."""
    wo = _unit(wo)
    n = _unit(n)
    wrk, ctr = _scratch()
    return float(
        _k.brdf_pdf_integral(
            *m.base_color, m.metallic, m.roughness, m.specular,
            wo[0], wo[1], wo[2], n[0], n[1], n[2], int(nsamples),
            int(seed), wrk, ctr,
        )
    )


def sampled_albedo(m: Material, wo, n, nsamples: int = 100_000,
                   seed: int = 0) -> np.ndarray:
    """E[f cos / pdf] over BSDF samples (should match ``albedo``)."""
    wo = _unit(wo)
    n = _unit(n)
    out = np.zeros(3, dtype=np.float64)
    wrk, ctr = _scratch()
    _k.brdf_sample_estimate(
        out, *m.base_color, m.metallic, m.roughness, m.specular,
        wo[0], wo[1], wo[2], n[0], n[1], n[2], int(nsamples), int(seed),
        wrk, ctr,
    )
    return out
