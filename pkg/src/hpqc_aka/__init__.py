"""5G-AKA with an X-Wing hybrid post-quantum KEM: library, simulator and CLI."""

__version__ = "0.1.0"
