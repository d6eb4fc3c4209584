import os
from dataclasses import dataclass
from dotenv import load_dotenv
from typing import Optional


class Config:
    """Singleton configuration class that loads environment variables from .env files."""

    _instance = None

    log_file: str
    log_level: str
    census_workers: int
    mc_shard_size: int
    default_seed: int
    report_dir: str
    exhaustive_max_q: int

    def __new__(cls):
        """Ensure only one instance of Config exists."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._initialized = False
        return cls._instance

    def __init__(self):
        """Load and validate environment variables from .env files."""
        if self._initialized:
            return

        load_dotenv()

        self._invalid = []
        self.log_file = os.getenv("LOG_FILE", "./logs/poncelet.log")
        self.log_level = os.getenv("LOG_LEVEL", "INFO").upper()
        self.census_workers = self._int_var("CENSUS_WORKERS", os.cpu_count() or 1)
        self.mc_shard_size = self._int_var("MC_SHARD_SIZE", 262144)
        self.default_seed = self._int_var("DEFAULT_SEED", 20240601)
        self.report_dir = os.getenv("REPORT_DIR", "./data/reports")
        self.exhaustive_max_q = self._int_var("EXHAUSTIVE_MAX_Q", 9)

        self._validate()
        self._initialized = True

    def _int_var(self, name: str, default: int) -> int:
        raw = os.getenv(name)
        if raw is None or raw == "":
            return default
        try:
            return int(raw)
        except ValueError:
            self._invalid.append(name)
            return default

    def _validate(self):
        """Validate that every environment variable holds a usable value."""
        invalid_vars = list(self._invalid)

        if self.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            invalid_vars.append("LOG_LEVEL")
        if self.census_workers < 1 and "CENSUS_WORKERS" not in invalid_vars:
            invalid_vars.append("CENSUS_WORKERS")
        if self.mc_shard_size < 1 and "MC_SHARD_SIZE" not in invalid_vars:
            invalid_vars.append("MC_SHARD_SIZE")
        if self.default_seed < 0 and "DEFAULT_SEED" not in invalid_vars:
            invalid_vars.append("DEFAULT_SEED")
        if self.exhaustive_max_q < 3 and "EXHAUSTIVE_MAX_Q" not in invalid_vars:
            invalid_vars.append("EXHAUSTIVE_MAX_Q")

        if invalid_vars:
            raise ValueError(
                f"Invalid environment variables: {', '.join(invalid_vars)}"
            )


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one census run, assembled from CLI arguments."""

    p: int
    r: int = 1
    n_min: int = 3
    n_max: int = 3
    class_tags: tuple[str, ...] = ()
    param_budget: Optional[int] = None
    samples: int = 0
    seed: int = 0
    workers: int = 1
    shard_size: int = 262144
    out: Optional[str] = None
    fmt: str = "csv"

    def __post_init__(self):
        problems = []
        if self.p < 3 or self.p % 2 == 0:
            problems.append(f"p={self.p} must be an odd prime")
        if not 1 <= self.r <= 4:
            problems.append(f"r={self.r} must lie in 1..4")
        if not 3 <= self.n_min <= self.n_max <= 9:
            problems.append(f"n range {self.n_min}..{self.n_max} must lie in 3..9")
        if self.samples < 0:
            problems.append("samples must be non-negative")
        if self.workers < 1:
            problems.append("workers must be positive")
        if self.shard_size < 1:
            problems.append("shard size must be positive")
        if self.fmt not in ("csv", "json"):
            problems.append(f"format {self.fmt!r} must be csv or json")
        if problems:
            raise ValueError(f"Invalid run configuration: {'; '.join(problems)}")

    @property
    def q(self) -> int:
        return self.p**self.r

    @property
    def n_values(self) -> range:
        return range(self.n_min, self.n_max + 1)

    @classmethod
    def from_config(cls, config: Config, **overrides) -> "RunConfig":
        """Fill unset run parameters from the process configuration."""
        defaults = {
            "workers": config.census_workers,
            "shard_size": config.mc_shard_size,
            "seed": config.default_seed,
        }
        for key, value in defaults.items():
            if overrides.get(key) is None:
                overrides[key] = value
        return cls(**overrides)
