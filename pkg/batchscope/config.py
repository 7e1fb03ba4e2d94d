from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import PositiveFloat, PositiveInt, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    output_dir: str = str(BASE_DIR / "results")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    workers: PositiveInt = 1

    # analysis knobs shared by run and analyze
    shapley_samples: PositiveInt = 128
    shapley_background_cap: PositiveInt = 256
    permutation_repeats: PositiveInt = 10
    fis_points: Optional[PositiveInt] = None
    dis_bandwidth: Union[Literal["median"], PositiveFloat] = "median"
    des_leave_one_out: bool = False

    model_config = SettingsConfigDict(
        env_prefix="BATCHSCOPE_",
        env_file=str(BASE_DIR / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level", mode="before")
    @classmethod
    def _upper_level(cls, value):
        return value.upper() if isinstance(value, str) else value


settings = Settings()
