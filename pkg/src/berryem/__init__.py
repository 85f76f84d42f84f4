"""Berry phases and Chern numbers of continuum electromagnetic media."""

from importlib.metadata import PackageNotFoundError, version as _version

from . import berry, bulk, emcore, emitter, media, spp
from .errors import *  # noqa: F401,F403

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover - source checkout without install
    __version__ = "0.0.0"

__all__ = ["berry", "bulk", "emcore", "emitter", "media", "spp", "__version__"]
