"""sie-lab: discrete schemes for one-dimensional, bisingular and two-dimensional
singular integral equations, with convergence and stability harnesses."""

from .trig import NodeSet, TrigPoly, cauchy_apply, hilbert_apply, interpolate, plemel_split

__all__ = [
    "NodeSet",
    "TrigPoly",
    "cauchy_apply",
    "hilbert_apply",
    "interpolate",
    "plemel_split",
]
