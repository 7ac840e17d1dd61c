import os
from pathlib import Path
from typing import Union

from .logger import Logger

logger = Logger()


def get_lab_home() -> str:
    """
    Root folder of the lab's per-user state, $HOMOG_HOME or the user's home

    Returns:
        str: the home directory.
    """
    return str(os.getenv("HOMOG_HOME", default=os.path.expanduser("~")))


def cache_folder() -> Path:
    """Folder holding the effective-model cache"""
    return Path(get_lab_home()) / ".homoglab" / "cache"


def ensure_folder(path: Union[str, Path]) -> Path:
    """
    Create a folder (and its parents) if it is missing

    Raises:
        OSError: if the folder cannot be created.
    """
    folder = Path(path)
    if not folder.is_dir():
        folder.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Directory {folder} has been created")
    return folder
