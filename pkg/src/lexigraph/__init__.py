"""Multiplex lexical networks and per-layer T-GCN models for predicting
which words a child will learn next."""

__version__ = "0.1.0"
