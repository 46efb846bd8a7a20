"""Ion chain model and equilibrium search."""

from src.chain.model import (
    ChainParams,
    DisorderParams,
    IonConfiguration,
    Variant,
    energy,
    gradient,
    hessian,
    trap_centers,
)

__all__ = [
    "ChainParams",
    "DisorderParams",
    "IonConfiguration",
    "Variant",
    "energy",
    "gradient",
    "hessian",
    "trap_centers",
]
