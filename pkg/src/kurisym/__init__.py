"""Kurihara modular-symbol sums and Kolyvagin-prime arithmetic for elliptic curves over Q."""

__version__ = "0.1.0"
