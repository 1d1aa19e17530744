"""Spatial birth-and-death processes with shot-noise death rates."""
