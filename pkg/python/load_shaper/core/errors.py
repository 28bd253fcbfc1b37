from __future__ import annotations

from typing import Sequence, Tuple, Union

PathItem = Union[str, int]


class InstanceFormatError(ValueError):
    """Malformed or invariant-violating instance input.

    `path` locates the offending field, e.g. ("homes", 2, "ewh", "tank_capacity_kg").
    """

    def __init__(self, message: str, path: Sequence[PathItem] = ()):
        self.path: Tuple[PathItem, ...] = tuple(path)
        where = ".".join(str(p) for p in self.path) or "<root>"
        super().__init__(f"{where}: {message}")


class AuditError(RuntimeError):
    def __init__(self, message: str, home: int | None = None, tags: Sequence[str] = ()):
        self.home = home
        self.tags = list(tags)
        super().__init__(message)


class SolverError(RuntimeError):
    pass
