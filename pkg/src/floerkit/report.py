"""Uniform check reports shared by every verifier."""

from dataclasses import dataclass, field

__all__ = ["Report", "SCHEMA_VERSION"]

SCHEMA_VERSION = "1"


@dataclass
class Report:
    """Outcome of one identity check.

    ``identity`` names the verified identity in words so a failure can be
    traced back to the formula it tests.  ``defects`` lists every violation
    found; ``out_of_window`` lists instances the finite data cannot decide.
    """

    check: str
    identity: str
    ok: bool = True
    defects: list = field(default_factory=list)
    out_of_window: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def add_defect(self, **kw):
        self.ok = False
        self.defects.append(kw)

    def merge(self, other):
        self.ok = self.ok and other.ok
        self.defects.extend(other.defects)
        self.out_of_window.extend(other.out_of_window)
        for k, v in other.stats.items():
            if isinstance(v, int) and isinstance(self.stats.get(k, 0), int):
                self.stats[k] = self.stats.get(k, 0) + v
            else:
                self.stats[k] = v
        self.notes.extend(n for n in other.notes if n not in self.notes)
        return self

    def to_json(self):
        return {
            "check": self.check,
            "identity": self.identity,
            "ok": self.ok,
            "defects": self.defects,
            "out_of_window": self.out_of_window,
            "stats": self.stats,
            "notes": self.notes,
        }

    def summary(self):
        status = "PASS" if self.ok else "FAIL"
        line = f"{status} {self.check}: {self.identity}"
        extra = []
        if self.defects:
            extra.append(f"{len(self.defects)} defect(s)")
        if self.out_of_window:
            extra.append(f"{len(self.out_of_window)} out-of-window")
        for k in sorted(self.stats):
            v = self.stats[k]
            if isinstance(v, (int, str)):
                extra.append(f"{k}={v}")
        return line + (" [" + ", ".join(extra) + "]" if extra else "")
