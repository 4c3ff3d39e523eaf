"""
Application settings and configuration
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Application
    APP_NAME: str = "ProSite Workbench"
    DEBUG: bool = False

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # Snapshots
    DEFAULT_BUDGET: int = 6
    REACH: int = 256  # max orbit count of a lazily materialized G-set
    MAX_GROUP_ORDER: int = 8

    # Topology
    SATURATION_DEPTH: int = 4
    MAX_FAMILY_SIZE: int = 8

    # Pro-categories
    REINDEX_DEPTH: int = 2
    SAMPLE_CHAIN_LIMIT: int = 4
    PRO_BUDGET: int = 4  # snapshot budget of the pro-site, capped below the run budget
    BASE_CHANGE_BUDGET: int = 2000

    # Randomized campaigns
    DEFAULT_SEED: int = 42
    COMPOSITION_CAMPAIGN: int = 100
    COLIM_CAMPAIGN: int = 20
    SPLIT_CAMPAIGN: int = 12
    MAX_TOWER_LENGTH: int = 8

    # Cohomology
    CECH_MAX_DEGREE: int = 5

    # Paths
    FIXTURE_DIR: str = "fixtures"
    REPORT_DIR: str = "reports"

    model_config = SettingsConfigDict(env_file=".env", env_prefix="WORKBENCH_", extra="ignore")


_settings = None


def get_settings() -> Settings:
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings
