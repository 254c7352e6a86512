"""Image-space physically based relighting from material G-buffers."""

from .brdf import eval_brdf, fresnel_schlick, geometry_smith_ggx, ndf_ggx
from .color import ToneMapParams, linear_to_srgb, srgb_to_linear, tonemap_agx
from .envmap import EnvironmentMap, EnvironmentPyramid, dir_to_uv, uv_to_dir
from .prefilter import (
    DfgLut,
    PrefilterConfig,
    build_dfg_lut,
    multiscatter_terms,
    prefilter_diffuse,
    prefilter_specular,
)
from .shading import (
    CameraModel,
    MaterialEdit,
    MaterialGBuffer,
    RelightConfig,
    edit_material,
    relight,
    relight_orbit,
)

__all__ = [
    "CameraModel",
    "DfgLut",
    "EnvironmentMap",
    "EnvironmentPyramid",
    "MaterialEdit",
    "MaterialGBuffer",
    "PrefilterConfig",
    "RelightConfig",
    "ToneMapParams",
    "build_dfg_lut",
    "dir_to_uv",
    "edit_material",
    "eval_brdf",
    "fresnel_schlick",
    "geometry_smith_ggx",
    "linear_to_srgb",
    "multiscatter_terms",
    "ndf_ggx",
    "prefilter_diffuse",
    "prefilter_specular",
    "relight",
    "relight_orbit",
    "srgb_to_linear",
    "tonemap_agx",
    "uv_to_dir",
]

__version__ = "0.1.0"
