"""Subhyperbolic distances, certificates and Sobolev-extension checks for planar domains."""
from . import catalog, certify, chains, geometry, metric, selfimprove, sharpmax
from .errors import SubhypError

__all__ = ["catalog", "certify", "chains", "geometry", "metric", "selfimprove", "sharpmax", "SubhypError"]
__version__ = "0.1.0"
