"""Bridgecraft: score promotional social-media text for the predicted
political diversity of its engaging audience, explain the scores, and
design/analyze split advertising experiments that validate them."""

__version__ = "0.1.0"
