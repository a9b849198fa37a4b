"""Simulated network, bounded adversary deduction and attack scenarios."""
