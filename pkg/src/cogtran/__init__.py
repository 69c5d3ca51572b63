"""Cognate Transformer: proto-word reconstruction and cognate reflex prediction
over aligned cognate sets."""

__version__ = "0.1.0"
