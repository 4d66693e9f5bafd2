"""Heat transport in static and periodically driven harmonic networks"""
__version__ = "0.1.0"
