"""Lattice, walk, curve, measure and Loewner primitives."""
