"""Hyperbolic ray-tracing engine and experiment harness for cohomology
fractals of hyperbolic 3-manifolds."""

__version__ = "0.1.0"
