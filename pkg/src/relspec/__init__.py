"""relspec: Bogolyubov invariants of operator pairs from truncated spectral data"""

__version__ = "0.1.0"
