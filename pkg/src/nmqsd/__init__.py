"""Non-Markovian quantum state diffusion: trajectories, ensembles and exact oracles."""

__version__ = "0.1.0"
