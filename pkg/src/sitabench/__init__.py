"""Privacy-utility benchmark for SITA-transformed smart-building sensor data."""

__version__ = "0.1.0"
