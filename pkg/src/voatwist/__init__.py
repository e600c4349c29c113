"""Twisted vertex-algebra toolkit: series, kernels, modes, Zhu algebras, blocks and fusion."""

__version__ = "0.1.0"
