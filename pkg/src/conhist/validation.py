"""Diagnostic reports returned by the ``validate_*`` operations."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Issue:
    kind: str
    subject: str
    residual: float | None = None
    message: str = ""

    def as_dict(self) -> dict:
        return {"kind": self.kind, "subject": self.subject, "residual": self.residual,
                "message": self.message}

    def __str__(self) -> str:
        res = "" if self.residual is None else f" (residual {self.residual:.3e})"
        msg = f": {self.message}" if self.message else ""
        return f"[{self.kind}] {self.subject}{res}{msg}"


@dataclass
class ValidationReport:
    """Collected violations; an empty report means the object is valid.

    ``notes`` carry informational findings that are not violations
    (e.g. which element is the unit of a partial semigroup).
    """

    issues: list[Issue] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, kind: str, subject: str, residual: float | None = None, message: str = ""):
        self.issues.append(Issue(kind, subject, residual, message))

    def kinds(self) -> set[str]:
        return {i.kind for i in self.issues}

    def extend(self, other: "ValidationReport", prefix: str = ""):
        for i in other.issues:
            self.issues.append(Issue(i.kind, prefix + i.subject, i.residual, i.message))

    def as_dict(self) -> dict:
        return {"ok": self.ok, "issues": [i.as_dict() for i in self.issues],
                "notes": self.notes}

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(i) for i in self.issues)
