"""Configuration management for msrcert runs."""

import logging
import os
from dataclasses import dataclass, field
from typing import Optional


def _threads_from_env() -> int:
    raw = os.environ.get("MSRCERT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            logging.getLogger(__name__).warning(f"Ignoring non-integer MSRCERT_THREADS={raw!r}")
    return os.cpu_count() or 1


@dataclass
class MsrCertConfig:
    """Process-wide defaults for certification and attack runs."""
    log_level: str = "INFO"
    threads: int = field(default_factory=_threads_from_env)
    # certification
    tol: float = 1e-3  # normalized units
    bisection_cap: int = 40
    # attack
    sims: int = 1000
    alpha: float = 0.5
    neighbor_limit: int = 1000
    budget_fraction: float = 0.5
    max_iterations: int = 10_000
    depth: int = 2
    seed: int = 0

    @classmethod
    def from_env(cls) -> "MsrCertConfig":
        return cls(log_level=os.environ.get("MSRCERT_LOG_LEVEL", "INFO"))

    def setup_logging(self, level: Optional[str] = None) -> None:
        """Setup logging configuration (stderr, so stdout stays usable for MCP stdio)."""
        if level:
            self.log_level = level
        logging.basicConfig(
            level=getattr(logging, self.log_level.upper(), logging.INFO),
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S"
        )


# Global configuration instance
config = MsrCertConfig.from_env()
