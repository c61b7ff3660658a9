#!/usr/bin/env python3

from dataclasses import dataclass, field
import hashlib

from ecostitch.errors import InvalidParams


@dataclass
class GeneratorParams:
    """Shape of a synthetic ecosystem; see ``corpus.generate_synthetic``."""
    products: int = 5
    revisions_per_product: int = 3
    functions_per_revision: int = 4
    clauses_per_revision: float = 1.5  # mean
    disjunction_probability: float = 0.3
    call_arcs_per_function: float = 1.5  # mean
    external_ratio: float = 0.4
    product_dag: bool = True
    seed: int = 0
    dangling_probability: float = 0.05

    dependency_seed: int = field(init=False, default=0)
    callgraph_seed: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        """validates input values and derives the per-stream seeds"""
        self._validate_parameters()
        self.dependency_seed = self._derive_seed("dependencies")
        self.callgraph_seed = self._derive_seed("callgraphs")

    def _validate_parameters(self) -> None:
        """ensures all counts are non-negative and probabilities lie in [0, 1]"""
        for name in ("products", "revisions_per_product", "functions_per_revision"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise InvalidParams(f"{name} must be a non-negative integer, got {value}")
        for name in ("clauses_per_revision", "call_arcs_per_function"):
            value = getattr(self, name)
            if value < 0:
                raise InvalidParams(f"{name} must be greater-or-equal 0, got {value}")
        for name in ("disjunction_probability", "external_ratio", "dangling_probability"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParams(f"{name} must lie in [0, 1], got {value}")
        if self.dangling_probability > 0.1:
            raise InvalidParams(
                f"dangling_probability must be at most 0.1, got {self.dangling_probability}")
        if not -2**63 <= self.seed < 2**64:
            raise InvalidParams(f"seed must fit in 64 bits, got {self.seed}")

    def _derive_seed(self, stream: str) -> int:
        """
        Generate a deterministic seed for one random stream.

        Args:
            stream: name of the stream, keeps streams independent

        Returns:
            int: a 64-bit seed derived from the user seed and the stream name.
        """
        combined = f"{self.seed}:{stream}".encode("utf-8")
        return int(hashlib.sha256(combined).hexdigest(), 16) % (2**64)
