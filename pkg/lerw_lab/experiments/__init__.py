"""Statistical experiments built on the core primitives."""
