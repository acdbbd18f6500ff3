import logging
import uuid
from typing import Optional


class LoggingMixin:
    """
    Logs to ``logging_name`` and stamps every record with the id of the
    current computation, ``<kind>-<8 hex digits>``, so that the records of
    interleaved contour extractions, optimizer runs or suites can be told
    apart in the log file.
    """

    logging_name = "hormander"

    run_id: Optional[str] = None

    def start_run(self, kind: Optional[str] = None) -> str:
        kind = kind or self.logging_name.rsplit(".", 1)[-1]
        self.run_id = f"{kind}-{uuid.uuid4().hex[:8]}"
        return self.run_id

    @property
    def logger(self) -> logging.Logger:
        return logging.getLogger(self.logging_name)

    def log(self, level: str, message: str, **kwargs):
        self.logger.log(
            logging.getLevelName(level.upper()),
            message,
            extra={"run": self.run_id},
            **kwargs,
        )


class RunIdFilter(logging.Filter):
    """Records logged outside a computation get "-" as run id."""

    def filter(self, record):
        record.run = getattr(record, "run", None) or "-"
        return True
