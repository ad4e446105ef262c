"""cephkit: deterministic cephalometric measurement, reporting, and dialogue toolkit."""

__version__ = "0.1.0"
