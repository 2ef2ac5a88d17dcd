"""Exact and floating-point tools for Nash-convergent game dynamics."""

from .game import Game, MixedProfile, Support, expected_utility, is_nash, regret
from .equilibria import enumerate_nash, is_nondegenerate, random_nondegenerate_game

__version__ = "0.1.0"

__all__ = [
    "Game",
    "MixedProfile",
    "Support",
    "enumerate_nash",
    "expected_utility",
    "is_nash",
    "is_nondegenerate",
    "random_nondegenerate_game",
    "regret",
    "__version__",
]
