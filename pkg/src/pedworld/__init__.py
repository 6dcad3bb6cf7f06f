"""Crosswalk scenario simulation, ego-view rendering, and latent world-model training."""

__version__ = "0.1.0"

DT = 0.06  # simulation step in seconds; time is stored as integer step counts
