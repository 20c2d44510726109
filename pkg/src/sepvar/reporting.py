"""Pass/fail reports shared by the verification-style operations."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_doc(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
        }

    def summary(self) -> str:
        bad = self.failures()
        lines = [f"{self.title}: {'pass' if self.passed else 'FAIL'} "
                 f"({len(self.checks)} checks)"]
        for c in bad:
            lines.append(f"  FAIL {c.name}: {c.detail}")
        return "\n".join(lines)
