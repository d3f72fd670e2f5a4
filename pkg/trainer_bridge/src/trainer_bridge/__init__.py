"""Toy-scale fine-tuning bridge between a chat corpus and an eval harness."""

__version__ = "0.1.0"
