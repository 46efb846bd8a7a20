from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="IONCHAIN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Worker processes for sweeps (--threads overrides)
    threads: int = 1

    # Logging
    log_level: str = "INFO"

    # Paths
    data_dir: Path = Path(__file__).parent.parent / "data"

    def run_dir(self, command: str) -> Path:
        return self.data_dir / command


settings = Settings()
