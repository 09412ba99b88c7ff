"""GRPO with a margin cosine clinical reward on a synthetic report-generation task."""

__version__ = "0.1.0"
