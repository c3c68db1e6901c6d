"""LPPL bubble diagnostics: window scans, bootstrap critical-time windows,
post-analysis measures and SHA-2 forecast commitments."""

__version__ = "0.1.0"
