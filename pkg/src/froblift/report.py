"""Pass/fail reports shared by the validators."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Check:
    name: str
    passed: bool | None  # None: not applicable
    detail: str = ""

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "N/A"}[self.passed]


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool | None, detail: str = "") -> bool | None:
        self.checks.append(Check(name, passed, detail))
        return passed

    def extend(self, other: "Report") -> None:
        self.checks.extend(other.checks)

    @property
    def ok(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.passed is False]

    @property
    def first_failure(self) -> Check | None:
        fails = self.failures()
        return fails[0] if fails else None

    def render(self) -> str:
        lines = [f"== {self.title}: {'ok' if self.ok else 'FAILED'}"]
        for c in self.checks:
            line = f"{c.status:4} {c.name}"
            if c.detail:
                line += f": {c.detail}"
            lines.append(line)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "ok": self.ok,
            "checks": [
                {"name": c.name, "status": c.status, "detail": c.detail}
                for c in self.checks
            ],
        }
