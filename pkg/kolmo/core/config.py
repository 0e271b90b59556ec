import enum
from pathlib import Path

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load .env from the package root (kolmo/.env)
_env_path = Path(__file__).resolve().parent.parent / ".env"
load_dotenv(_env_path)


class Precision(str, enum.Enum):
    F64 = "f64"
    EXTENDED = "extended"
    RATIONAL = "rational"


class Settings(BaseSettings):
    PROJECT_NAME: str = "kolmo"
    LOG_LEVEL: str = "INFO"

    # --- Series ---
    SERIES_ORDER: int = 12
    JET_DEGREE: int = 2

    # --- Integrator ---
    RTOL: float = 1e-12
    ATOL: float = 1e-14
    MAX_STEP: float = 0.05
    EVENT_TOL: float = 1e-12
    EXTENDED_DPS: int = 40
    PRECISION: Precision = Precision.F64

    # --- Output ---
    OUTPUT_DIR: str = "out"

    model_config = SettingsConfigDict(env_prefix="KOLMO_", case_sensitive=True)


settings = Settings()


class IntegratorConfig(BaseModel):
    """Tolerances and precision mode shared by every flow computation."""

    model_config = ConfigDict(frozen=True)

    rtol: float = 1e-12
    atol: float = 1e-14
    max_step: float = 0.05
    event_tol: float = 1e-12
    precision: Precision = Precision.F64
    extended_dps: int = 40

    @model_validator(mode="after")
    def _check_tolerances(self):
        if min(self.rtol, self.atol, self.max_step, self.event_tol) <= 0:
            raise ValueError("tolerances and max_step must be positive")
        if self.event_tol > max(self.rtol, self.atol):
            raise ValueError(f"event_tol {self.event_tol} looser than integration tolerance {self.rtol}")
        if self.extended_dps < 20:
            raise ValueError("extended precision needs at least 20 digits (>= 64-bit significand)")
        return self

    @classmethod
    def from_settings(cls, **overrides) -> "IntegratorConfig":
        values = dict(
            rtol=settings.RTOL,
            atol=settings.ATOL,
            max_step=settings.MAX_STEP,
            event_tol=settings.EVENT_TOL,
            precision=settings.PRECISION,
            extended_dps=settings.EXTENDED_DPS,
        )
        values.update(overrides)
        return cls(**values)

    def with_precision(self, precision: Precision) -> "IntegratorConfig":
        return self.model_copy(update={"precision": precision})
