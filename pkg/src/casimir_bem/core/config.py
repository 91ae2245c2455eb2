from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    LOG_LEVEL: str = "info"
    THREADS: Optional[int] = Field(None, ge=1)
    QUADRATURE_ORDER: int = 6
    NEAR_QUADRATURE_ORDER: int = 12
    NEAR_FACTOR: float = Field(2.0, gt=0)
    CHUNK_SIZE: int = Field(512, ge=1)
    CHARGE_NEUTRAL: bool = True
    STRICT_SINGULAR: bool = False

    model_config = SettingsConfigDict(
        env_prefix="CASIMIR_BEM_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
