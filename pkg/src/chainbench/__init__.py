"""chainbench: exact chain-complex computations with homotopy certificates."""

__version__ = "0.1.0"
