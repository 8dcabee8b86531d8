"""Purely affective interactions: players whose utilities depend on their own
action and on the utility levels of the others."""

__version__ = "0.1.0"
