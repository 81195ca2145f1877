"""planvec: floor-plan wall-mask vectorization and 3D reconstruction."""

__version__ = "0.1.0"

from ._backend import ACTIVE_BACKEND  # noqa: F401
