"""ChemVise-style pipeline: sensor simulation, embedding-target training,
linear-combination augmentation, and an evaluation harness."""

__version__ = "0.1.0"
