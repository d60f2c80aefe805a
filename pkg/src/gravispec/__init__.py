"""Noise spectra and detectability of conditionally-sourced classical
gravity versus quantized gravity in monitored optomechanical systems."""

__version__ = "0.1.0"
