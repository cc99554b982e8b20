"""Functionals on convex bodies: volumes, quermassintegrals, mixed volumes, capacities."""
