"""Local density of states of perturbed chaotic maps and billiards."""

from .maps import EffectivePlanck, PerturbationSpec, TorusPoint

__all__ = ["EffectivePlanck", "PerturbationSpec", "TorusPoint"]
