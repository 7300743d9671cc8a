"""Speech Mender - correct speech recordings against target text."""

__version__ = "0.1.0"
