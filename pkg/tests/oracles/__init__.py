"""Standalone reference routines used to freeze expected test values.

Nothing in here imports ``hpqc_aka``; each oracle is written directly
against hashlib / kyber-py so it stays independent of the code it checks.
"""
