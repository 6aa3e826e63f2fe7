"""
Lab Configuration
Operation budgets and runtime settings read from the environment
"""
import os
from dataclasses import dataclass, replace
from typing import Optional

from dotenv import load_dotenv

from .errors import InvalidArgumentError

# Load environment variables
load_dotenv()

DEFAULT_BUDGET = 1_000_000_000


def _int_setting(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        value = int(raw.replace('_', ''), 0)
    except ValueError:
        raise InvalidArgumentError(f"{name} must be an integer, got {raw!r}", variable=name)
    if value < minimum:
        raise InvalidArgumentError(f"{name} must be at least {minimum}, got {value}", variable=name)
    return value


@dataclass(frozen=True)
class LabConfig:
    """Budgets and knobs shared by the compute modules"""

    budget: int = DEFAULT_BUDGET
    k3_max_limit: int = 3000
    k3_max_m: int = 4
    prop21_max_limit: int = 200
    partition_size: int = 4_000_000
    workers: int = 1
    sieve_cache_dir: Optional[str] = None
    log_level: str = 'WARNING'

    @classmethod
    def from_env(cls) -> 'LabConfig':
        """Build a configuration from RMF_LAB_* environment variables"""
        return cls(
            budget=_int_setting('RMF_LAB_BUDGET', DEFAULT_BUDGET),
            k3_max_limit=_int_setting('RMF_LAB_K3_MAX_LIMIT', 3000),
            k3_max_m=_int_setting('RMF_LAB_K3_MAX_M', 4, minimum=0),
            prop21_max_limit=_int_setting('RMF_LAB_PROP21_MAX_LIMIT', 200),
            partition_size=_int_setting('RMF_LAB_PARTITION_SIZE', 4_000_000),
            workers=_int_setting('RMF_LAB_WORKERS', 1),
            sieve_cache_dir=os.getenv('RMF_LAB_SIEVE_CACHE_DIR') or None,
            log_level=os.getenv('RMF_LAB_LOG_LEVEL', 'WARNING').upper(),
        )

    def with_overrides(self, **changes) -> 'LabConfig':
        """Copy with the given fields replaced; None values are ignored"""
        changes = {key: value for key, value in changes.items() if value is not None}
        if 'budget' in changes and changes['budget'] < 1:
            raise InvalidArgumentError(f"budget must be positive, got {changes['budget']}")
        return replace(self, **changes)


# Singleton instance
_lab_config = None


def get_lab_config() -> LabConfig:
    """Get singleton lab configuration"""
    global _lab_config
    if _lab_config is None:
        _lab_config = LabConfig.from_env()
    return _lab_config


def set_lab_config(config: LabConfig) -> None:
    """Install a configuration for the rest of the process (the CLI applies its flags this way)"""
    global _lab_config
    _lab_config = config


def reset_lab_config() -> None:
    """Forget the cached configuration so the environment is read again"""
    global _lab_config
    _lab_config = None
