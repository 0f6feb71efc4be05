"""Skin effects of quadratic fermionic Lindbladians: single-particle NH matrices,
third quantization, point-gap topology and an exact many-body reference."""

__version__ = "0.1.0"

from .errors import (CapacityError, GapClosedError, LindskinError, ModelError,  # noqa: E402
                     NumericalError)
from .model import (BlochModel, RealSpaceModel, build_h_eff, build_h_post,  # noqa: E402
                    make_hatano_nelson, spectrum)

__all__ = [
    "__version__", "BlochModel", "RealSpaceModel", "build_h_eff", "build_h_post",
    "make_hatano_nelson", "spectrum", "LindskinError", "ModelError", "CapacityError",
    "NumericalError", "GapClosedError",
]
