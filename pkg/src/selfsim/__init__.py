"""Self-similar potentials, q-deformed ladder algebras and coherent states."""

__version__ = "0.1.0"
