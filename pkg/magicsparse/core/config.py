import os
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv

load_dotenv()


class Settings(BaseSettings):
    PROJECT_NAME: str = "magicsparse"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    DENSE_MAX_QUBITS: int = int(os.getenv("DENSE_MAX_QUBITS", "20"))
    EXACT_FULL_MAX_QUBITS: int = int(os.getenv("EXACT_FULL_MAX_QUBITS", "12"))
    DENSE_CHECK_MAX_QUBITS: int = int(os.getenv("DENSE_CHECK_MAX_QUBITS", "12"))
    ENUMERATION_MAX_QUBITS: int = int(os.getenv("ENUMERATION_MAX_QUBITS", "12"))

    SAMPLING_BLOCK: int = int(os.getenv("SAMPLING_BLOCK", "64"))
    FASTNORM_BLOCK: int = int(os.getenv("FASTNORM_BLOCK", "256"))
    FASTNORM_CHEBYSHEV_CONSTANT: float = float(os.getenv("FASTNORM_CHEBYSHEV_CONSTANT", "8.0"))
    GRAM_BLOCK_ELEMENTS: int = int(os.getenv("GRAM_BLOCK_ELEMENTS", str(1_000_000)))

    POSTSELECT_FACTOR: float = float(os.getenv("POSTSELECT_FACTOR", "2.0"))
    POSTSELECT_MAX_ATTEMPTS: int = int(os.getenv("POSTSELECT_MAX_ATTEMPTS", "64"))

    REGIME_EXTENT_FACTOR: float = float(os.getenv("REGIME_EXTENT_FACTOR", "10.0"))
    REGIME_DELTA_FACTOR: float = float(os.getenv("REGIME_DELTA_FACTOR", "0.1"))

    BENCH_DEFAULT_L: int = int(os.getenv("BENCH_DEFAULT_L", "16"))

    MAX_WORKERS: int = int(os.getenv("MAX_WORKERS", "4"))

    model_config = SettingsConfigDict(env_file=".env", extra="ignore")


settings = Settings()
