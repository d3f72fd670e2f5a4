"""Toolchain for NCM/HS product nomenclatures: validation, fine-tuning corpus
generation, lexical retrieval prompting, and blind judge evaluation."""

__version__ = "0.1.0"
