"""Finite-window experiments with factor-of-iid spanning trees and forests on lattices."""

__version__ = "0.1.0"
