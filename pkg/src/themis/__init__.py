"""Code preference mining, cleaning, benchmark assembly, and reward-model evaluation."""

__version__ = "0.1.0"

SCHEMA_VERSION = "themis/1"
