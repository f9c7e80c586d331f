from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="GATEFORGE_", env_file=".env", env_file_encoding="utf-8", case_sensitive=False, extra="ignore"
    )

    SEED: Optional[int] = None

    OUTPUT_DIR: str = "./runs"
    STORAGE_DIR: str = "./storage"
    LEDGER_ENABLED: bool = True
    WORKER_THREADS: int = 2
    LOG_LEVEL: str = "INFO"

    DEFAULT_LAMBDA: float = 1.0
    DEFAULT_MAX_ITERS: int = 200
    DEFAULT_STOP_FIDELITY: float = 0.999
    DEFAULT_STOP_UPDATE_NORM: float = 1e-12
    DEFAULT_GRADIENT_STEP: float = 0.02

    GUESS_FLUENCE: float = 1e-3
    SAFEGUARD_HALVINGS: int = 30


settings = Settings()
