from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Process-level settings.
    Loaded from MESHDQN_* environment variables and the .env file.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="MESHDQN_",
        extra="ignore",
    )

    # Root log level (MESHDQN_LOG)
    LOG: str = "INFO"

    # Default run-config file used when --config is not given
    CONFIG: Optional[str] = None

    # Default output directory used when neither --out nor the config sets one
    OUTPUT_DIR: str = "./runs"

    # Enables the long acceptance runs in the test suite
    RUN_SLOW: bool = False


settings = Settings()
