import os
import logging
import threading
from datetime import datetime

MARKERS = {
    logging.DEBUG: "🕷️ ",
    logging.INFO: "",
    logging.WARNING: "⚠️ ",
    logging.ERROR: "🔴 ",
    logging.CRITICAL: "💥 ",
}


def parse_level(value) -> int:
    """Integer level from an int, a numeric string or a level name such as 'debug'"""
    if isinstance(value, int):
        return value
    text = str(value).strip()
    if text.lstrip("-").isdigit():
        return int(text)
    level = logging.getLevelName(text.upper())
    if not isinstance(level, int):
        raise ValueError(f"unknown log level {value!r}")
    return level


# pylint: disable=broad-except
class Logger:
    """
    Process-wide logger for the lab.

    Singleton: every module calls Logger() at import and gets the same
    instance. The first construction reads $HOMOG_LOG_LEVEL (a number or a
    level name); set_level changes it afterwards. Lines written from sweep
    worker threads carry the thread name.
    """

    __instance = None

    def __new__(cls):
        if cls.__instance is None:
            cls.__instance = super(Logger, cls).__new__(cls)
        return cls.__instance

    def __init__(self):
        if hasattr(self, "_singleton_initialized"):
            return
        self._singleton_initialized = True
        self._lock = threading.Lock()
        raw = os.environ.get("HOMOG_LOG_LEVEL", str(logging.INFO))
        try:
            self.log_level = parse_level(raw)
        except Exception as err:
            self.log_level = logging.INFO
            self._emit(logging.WARNING, f"ignoring $HOMOG_LOG_LEVEL={raw!r} ({err}), using INFO")

    def set_level(self, level):
        self.log_level = parse_level(level)

    def is_enabled(self, level: int) -> bool:
        return self.log_level <= level

    def debug(self, message):
        self.log(logging.DEBUG, message)

    def info(self, message):
        self.log(logging.INFO, message)

    def warn(self, message):
        self.log(logging.WARNING, message)

    def error(self, message):
        self.log(logging.ERROR, message)

    def critical(self, message):
        self.log(logging.CRITICAL, message)

    def log(self, level: int, message):
        if self.is_enabled(level):
            self._emit(level, message)

    def _emit(self, level: int, message):
        thread = threading.current_thread()
        origin = "" if thread is threading.main_thread() else f"[{thread.name}] "
        stamp = str(datetime.now())[2:-7]
        with self._lock:
            print(f"{stamp} - {origin}{MARKERS.get(level, '')}{message}")
