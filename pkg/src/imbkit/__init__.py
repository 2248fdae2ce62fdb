"""Class-imbalance mitigation toolkit with a seeded benchmark harness."""

from .core import Dataset, class_weights, compute_fdr, derive_seed, stratified_split, vmr

__version__ = "0.1.0"

__all__ = ["Dataset", "class_weights", "compute_fdr", "derive_seed", "stratified_split", "vmr"]
