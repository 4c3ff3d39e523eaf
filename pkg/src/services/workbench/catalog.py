"""
Fixture catalog - shipped site files described in catalog.yaml
"""
from pathlib import Path
from typing import List, Optional, Union

import yaml
from loguru import logger

from src.config.settings import get_settings
from src.core.errors import PreconditionError
from src.models.schemas.fixture import FixtureCatalog, FixtureListing
from src.services.workbench.site_file import load_site

CATALOG_FILE = "catalog.yaml"


def fixture_dir(directory: Optional[Union[str, Path]] = None) -> Path:
    return Path(directory if directory is not None else get_settings().FIXTURE_DIR)


def load_catalog(directory: Optional[Union[str, Path]] = None) -> FixtureCatalog:
    path = fixture_dir(directory) / CATALOG_FILE
    if not path.is_file():
        raise PreconditionError(f"no fixture catalog at {path}")
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    return FixtureCatalog.model_validate(raw)


def fixture_path(name: str, directory: Optional[Union[str, Path]] = None) -> Path:
    """A catalog name or a site file name inside the fixture directory."""
    entry = load_catalog(directory).get(name)
    path = fixture_dir(directory) / (entry.file if entry else name)
    if not path.is_file():
        raise PreconditionError(f"no fixture named {name!r} in {fixture_dir(directory)}")
    return path


def list_fixtures(directory: Optional[Union[str, Path]] = None) -> List[FixtureListing]:
    """Catalog entries with snapshot sizes; beta_hint is card(Mor) of the snapshot and is not checked."""
    listings = []
    for entry in load_catalog(directory).fixtures:
        site = load_site(fixture_dir(directory) / entry.file)
        objects = site.objects()
        listings.append(
            FixtureListing(
                **entry.model_dump(),
                objects=len(objects),
                beta_hint=len(site.cat.all_morphisms(objects)),
            )
        )
    logger.debug(f"{len(listings)} fixtures in {fixture_dir(directory)}")
    return listings
