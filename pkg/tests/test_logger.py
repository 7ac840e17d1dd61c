"""
Lab logger
"""

import logging
import threading

import pytest

from LabKit.logger import Logger, parse_level


@pytest.mark.parametrize("value, expected", [
    (10, logging.DEBUG),
    ("20", logging.INFO),
    ("warning", logging.WARNING),
    (" Error ", logging.ERROR),
])
def test_parse_level(value, expected):
    assert parse_level(value) == expected


def test_parse_level_rejects_unknown_name():
    with pytest.raises(ValueError):
        parse_level("chatty")


def test_singleton_and_threshold(capsys):
    logger = Logger()
    previous = logger.log_level
    try:
        logger.set_level("warning")
        assert Logger() is logger
        logger.info("hidden")
        logger.warn("shown")
        out = capsys.readouterr().out
        assert "hidden" not in out
        assert "shown" in out
    finally:
        logger.set_level(previous)


def test_worker_thread_name_is_tagged(capsys):
    logger = Logger()
    worker = threading.Thread(target=lambda: logger.error("boom"), name="sweep-worker-0")
    worker.start()
    worker.join()
    assert "[sweep-worker-0] " in capsys.readouterr().out
