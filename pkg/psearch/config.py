from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix='PSEARCH_',
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=False,
        extra='ignore',
    )

    # Logging
    log_level: str = Field(default='INFO')

    # Runner parallelism (PSEARCH_THREADS)
    threads: int = Field(default=4, ge=1)

    # Numerics
    tolerance: float = Field(default=1e-9, gt=0)
    prize_cap: float = Field(default=50.0, gt=0)  # -log(1-p) clamp for p == 1
    max_tiers: int = Field(default=16, ge=1)
    distance_epsilon: float = Field(default=1e-6, gt=0)  # greedy score denominators
    pheromone_floor: float = Field(default=1e-12, gt=0)

    # Search limits
    max_expansions: int = Field(default=10_000_000, ge=1)
    time_limit_s: float = Field(default=60.0, gt=0)

    # Monte-Carlo
    mc_trials: int = Field(default=100_000, ge=1)
    mc_chunk_size: int = Field(default=10_000, ge=1)

    # Generators
    regenerate_tries: int = Field(default=100, ge=1)


# Create global settings instance
settings = Settings()
