"""Voice-driven code question gateway: ASR routing, transcript repair,
answer generation, and an offline evaluation harness."""

__version__ = "0.1.0"
