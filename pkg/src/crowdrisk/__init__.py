"""Crowd simulation coupled to airborne transmission risk estimates."""

__version__ = "0.1.0"
