import csv
import json
import logging
import math
import os
from typing import Iterable
from typing import Optional
from typing import Sequence

from filelock import FileLock

from .version import SCHEMA_VERSION
from .version import __full_version_str__

logger = logging.getLogger("hormander.output")


def _plain(value):
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return value
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    # numpy arrays and scalars; tolist() of a 0-d value is a python scalar
    if hasattr(value, "tolist") and callable(value.tolist):
        return _plain(value.tolist())
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    return str(value)


def format_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".12g")
    if hasattr(value, "item") and callable(value.item):
        return format_cell(value.item())
    return str(value)


def report(command: str, payload: dict, status: str = "ok") -> dict:
    document = {
        "schema_version": SCHEMA_VERSION,
        "version": __full_version_str__,
        "command": command,
        "status": status,
    }
    document.update(payload)
    return _plain(document)


def error_report(command: str, exit_code: int, reason: str, **details) -> dict:
    return report(
        command,
        {"exit_code": exit_code, "reason": reason, **details},
        status="error",
    )


def dumps(document: dict) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False)


class ArtifactWriter:
    """
    Writes the JSON reports and CSV tables of one command into a directory.
    All writes hold a lock on the directory, so concurrent runs never
    interleave files.
    """

    def __init__(self, directory: Optional[str], command: str):
        self.directory = directory
        self.command = command
        self.written = []
        if directory:
            os.makedirs(directory, exist_ok=True)
            self.lock = FileLock(os.path.join(directory, ".hormander.lock"))
        else:
            self.lock = None

    def _path(self, name: str) -> str:
        return os.path.join(self.directory, f"{self.command}_{name}")

    def write_json(self, name: str, document: dict) -> Optional[str]:
        if not self.directory:
            return None
        path = self._path(f"{name}.json")
        with self.lock:
            with open(path, "w", encoding="utf-8") as f:
                f.write(dumps(document))
                f.write("\n")
        self.written.append(path)
        logger.debug(f"Wrote {path}")
        return path

    def write_csv(
        self,
        name: str,
        header: Sequence[str],
        rows: Iterable[Sequence],
    ) -> Optional[str]:
        if not self.directory:
            return None
        path = self._path(f"{name}.csv")
        with self.lock:
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for row in rows:
                    writer.writerow([format_cell(v) for v in row])
        self.written.append(path)
        logger.debug(f"Wrote {path}")
        return path
