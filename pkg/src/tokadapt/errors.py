"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid or inconsistent configuration (bad thresholds, missing files, ...)."""


class ProfileGapError(KeyError):
    """A (task, gamma) pair required by the planner has no profiled row."""

    def __init__(self, task: str, gamma: int, kind: str = "profile"):
        super().__init__((task, gamma))
        self.task = task
        self.gamma = gamma
        self.kind = kind

    def __str__(self) -> str:
        return f"no {self.kind} entry for task={self.task!r} gamma={self.gamma}"


class TraceFormatError(ValueError):
    """A trace file failed to parse; carries the offending line number."""

    def __init__(self, path: str, line_no: int, detail: str):
        super().__init__(f"{path}:{line_no}: {detail}")
        self.path = path
        self.line_no = line_no
