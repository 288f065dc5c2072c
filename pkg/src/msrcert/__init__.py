"""Robustness quantification of text classifiers against word substitutions."""

from typing import List

__version__ = "0.1.0"

__all__: List[str] = ["__version__"]
