# backend/app/config.py
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()


class Settings:
    PROJECT_NAME: str = "Unisolver desk lab"
    PROJECT_VERSION: str = "0.1.0"

    # Caps the worker pool used by dataset generation
    UNISOLVER_THREADS: int = int(os.getenv("UNISOLVER_THREADS", str(os.cpu_count() or 1)))

    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = "%(message)s"

    # Storage dtype for generated datasets when a TaskSpec does not choose one
    DEFAULT_STORAGE_DTYPE: str = os.getenv("UNISOLVER_STORAGE_DTYPE", "f64")

    # Composite Simpson panel count for the string oracle
    DEFAULT_QUAD_PANELS: int = int(os.getenv("UNISOLVER_QUAD_PANELS", "128"))

    RUNS_DIR: Path = Path(os.getenv("UNISOLVER_RUNS_DIR", "./runs"))


settings = Settings()
