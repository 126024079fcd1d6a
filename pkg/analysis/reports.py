"""
Experiment reports: named series, rule-backed verdicts, flags, provenance.

Every verdict is stored with the rule that produced it, so a parsed report
can have its verdicts recomputed from its series alone. Rules:

  decreasing:<series>                strictly decreasing, length >= 2
  at_most:<series>:<bound>           every value <= bound
  at_least:<series>:<bound>          every value >= bound
  within_factor:<series>:<factor>    max/min <= factor (positive values)
  leq:<series_a>:<series_b>:<rtol>   a[i] <= b[i] * (1 + rtol)
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from analysis.textformat import format_value, parse_assignments
from analysis.errors import ConfigurationError, FormatError, InvariantViolation

logger = logging.getLogger(__name__)

REPORT_VERSION = 1


# ── Verdict rules ─────────────────────────────────────────────────────────────

def strictly_decreasing(values):
    return len(values) >= 2 and all(b < a for a, b in zip(values, values[1:]))


def _decreasing(series, name):
    return strictly_decreasing(series[name])


def _at_most(series, name, bound):
    return all(v <= float(bound) for v in series[name])


def _at_least(series, name, bound):
    return all(v >= float(bound) for v in series[name])


def _within_factor(series, name, factor):
    values = series[name]
    if not values or min(values) <= 0:
        return False
    return max(values) / min(values) <= float(factor)


def _leq(series, a, b, rtol):
    xs, ys = series[a], series[b]
    if len(xs) != len(ys) or not xs:
        return False
    return all(x <= y * (1 + float(rtol)) for x, y in zip(xs, ys))


RULES = {
    "decreasing":    _decreasing,
    "at_most":       _at_most,
    "at_least":      _at_least,
    "within_factor": _within_factor,
    "leq":           _leq,
}


def evaluate_rule(rule, series):
    kind, *args = rule.split(":")
    if kind not in RULES:
        raise FormatError(f"unknown verdict rule '{rule}'")
    try:
        return bool(RULES[kind](series, *args))
    except KeyError as exc:
        raise FormatError(f"rule '{rule}' refers to missing series {exc}") from None
    except (TypeError, ValueError):
        raise FormatError(f"malformed verdict rule '{rule}'") from None


# ── Report ────────────────────────────────────────────────────────────────────

@dataclass
class ExperimentReport:
    name:       str
    series:     dict = field(default_factory=dict)
    rules:      dict = field(default_factory=dict)
    verdicts:   dict = field(default_factory=dict)
    flags:      dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def add_series(self, name, values):
        if isinstance(values, (int, float)):
            values = [values]
        self.series[name] = [float(v) for v in values]

    def append(self, name, value):
        self.series.setdefault(name, []).append(float(value))

    def add_verdict(self, name, rule):
        self.rules[name]    = rule
        self.verdicts[name] = evaluate_rule(rule, self.series)
        logger.info("%s: verdict %s = %s", self.name, name, self.verdicts[name])
        return self.verdicts[name]

    def add_table(self, frame):
        """One series per column of a per-entry DataFrame, in column order."""
        for column in frame.columns:
            self.add_series(column, frame[column].to_numpy(dtype=float))
        return self

    def flag(self, name, value):
        self.flags[name] = value

    def absorb(self, other):
        """Merges another report's series, verdicts and flags; names must not collide."""
        clash = (set(self.series) & set(other.series)) | (set(self.verdicts) & set(other.verdicts))
        if clash:
            raise InvariantViolation(f"reports share names: {sorted(clash)}")
        self.series.update(other.series)
        self.rules.update(other.rules)
        self.verdicts.update(other.verdicts)
        self.flags.update(other.flags)
        return self

    @property
    def passed(self):
        return all(self.verdicts.values())

    def frame(self):
        """Series as a DataFrame (columns padded with NaN to equal length)."""
        return pd.DataFrame({k: pd.Series(v, dtype=float) for k, v in self.series.items()})


def recompute_verdicts(report):
    return {name: evaluate_rule(rule, report.series) for name, rule in report.rules.items()}


# ── Text format ───────────────────────────────────────────────────────────────

def emit_report(report):
    lines = [f"report-version = {REPORT_VERSION}", f"report.name = {format_value(report.name)}"]
    for key in sorted(report.provenance):
        lines.append(f"provenance.{key} = {format_value(report.provenance[key])}")
    for key, values in report.series.items():
        lines.append(f"series.{key} = {format_value(list(values))}")
    for key, rule in report.rules.items():
        lines.append(f"rule.{key} = {format_value(rule)}")
    for key, value in report.verdicts.items():
        lines.append(f"verdict.{key} = {format_value(bool(value))}")
    for key, value in report.flags.items():
        lines.append(f"flag.{key} = {format_value(value)}")
    return "\n".join(lines) + "\n"


def write_report(report, path):
    """Writes the report text and, when it has series, their table as CSV beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(emit_report(report), encoding="utf-8")
    if report.series:
        report.frame().to_csv(path.with_suffix(".csv"), index=False)
    logger.info("report written to %s", path)
    return path


def parse_report(text):
    try:
        entries = parse_assignments(text)
    except ConfigurationError as exc:
        raise FormatError(f"malformed report: {exc}") from None
    if not entries or entries[0][1] != "report-version":
        raise FormatError("report must start with 'report-version'")
    if entries[0][2] != REPORT_VERSION:
        raise FormatError(f"unsupported report version {entries[0][2]}")

    report = ExperimentReport(name="")
    for line, key, value in entries[1:]:
        head, _, rest = key.partition(".")
        if not rest:
            raise FormatError(f"line {line}: unexpected key '{key}'")
        if head == "report" and rest == "name":
            report.name = value
        elif head == "provenance":
            report.provenance[rest] = value
        elif head == "series":
            if not isinstance(value, list):
                raise FormatError(f"line {line}: series '{rest}' is not an array")
            report.series[rest] = [float(v) for v in value]
        elif head == "rule":
            report.rules[rest] = value
        elif head == "verdict":
            report.verdicts[rest] = bool(value)
        elif head == "flag":
            report.flags[rest] = value
        else:
            raise FormatError(f"line {line}: unexpected key '{key}'")
    return report
