"""Discrete-event simulator for the S-CoSenS duty-cycled MAC over 802.15.4."""

__version__ = "0.1.0"
