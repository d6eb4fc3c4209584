import json
import logging
import os
from logging.handlers import TimedRotatingFileHandler
from typing import Optional

from src.helpers.config import Config

# trace_id / span_id injection for Datadog log correlation
try:
    from ddtrace import patch

    patch(logging=True)
except ImportError:
    pass

PACKAGE_LOGGER = "src"

_logger: Optional[logging.Logger] = None
_run_context: dict[str, str] = {}


def set_run_context(**fields):
    """
    Attach run fields (command, q, n, seed, ...) to every following log record.

    None values remove a field. Worker processes started by fork inherit the
    context of the parent at pool creation.
    """
    for key, value in fields.items():
        if value is None:
            _run_context.pop(key, None)
        else:
            _run_context[key] = str(value)


def clear_run_context():
    _run_context.clear()


def run_context() -> dict[str, str]:
    return dict(_run_context)


class RunContextFilter(logging.Filter):
    """Adds `run` (a dict) and `run_label` ("command=.. q=..") to each record."""

    def filter(self, record: logging.LogRecord) -> bool:
        record.run = run_context()
        record.run_label = " ".join(f"{k}={v}" for k, v in record.run.items()) or "-"
        return True


class DataDogJSONFormatter(logging.Formatter):
    """One JSON object per record, with run fields and Datadog trace correlation."""

    def format(self, record: logging.LogRecord) -> str:
        log_record = {
            "timestamp": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "location": f"{record.filename}:{record.funcName}:{record.lineno}",
            "service": os.getenv("DD_SERVICE", "poncelet"),
            "run": getattr(record, "run", {}),
        }

        trace_id = getattr(record, "dd.trace_id", None)
        span_id = getattr(record, "dd.span_id", None)
        if trace_id or span_id:
            log_record["dd"] = {
                "trace_id": str(trace_id or ""),
                "span_id": str(span_id or ""),
            }

        if record.exc_info:
            log_record["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_record, ensure_ascii=False)


def _file_handler(log_file: str) -> logging.Handler:
    log_dir = os.path.dirname(log_file)
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
    handler = TimedRotatingFileHandler(
        log_file, when="midnight", interval=1, backupCount=7, encoding="utf-8"
    )
    handler.suffix = "%Y-%m-%d"
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(
        logging.Formatter(
            "%(asctime)s %(levelname)s %(name)s [%(run_label)s] "
            "%(filename)s:%(lineno)d %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )
    )
    return handler


def _console_handler(level: str) -> logging.Handler:
    # stderr keeps stdout free for CSV and JSON reports
    handler = logging.StreamHandler()
    handler.setLevel(getattr(logging, level, logging.INFO))
    if os.getenv("DD_LOGS_INJECTION", "false").lower() == "true":
        handler.setFormatter(DataDogJSONFormatter())
    else:
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(message)s", datefmt="%H:%M:%S")
        )
    return handler


def _create_logger(config: Config) -> logging.Logger:
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(logging.DEBUG)

    # pytest re-enters here with handlers already attached
    if logger.handlers:
        return logger

    for handler in (_file_handler(config.log_file), _console_handler(config.log_level)):
        handler.addFilter(RunContextFilter())
        logger.addHandler(handler)
    return logger


def get_logger(config: Optional[Config] = None) -> logging.Logger:
    """Configure the package logger once; library modules use logging.getLogger(__name__)."""
    global _logger
    if _logger is None:
        _logger = _create_logger(config or Config())
    return _logger
