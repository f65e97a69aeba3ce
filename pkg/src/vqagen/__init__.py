"""Reasoning-controlled VQA dataset generation, QC, balancing, and evaluation."""

__version__ = "0.1.0"
