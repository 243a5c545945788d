"""Line-oriented description language for path-identity experiments.

A document declares modes, lists sources and phase shifters in evolution
order, names a post-selection pattern, and binds phase symbols either to
fixed values or to sweep axes.  Example::

    version 1
    mode a1
    mode b1
    source a1 b1 gain 0.096
    phase a1 alpha
    postselect 1 1
    set alpha 0

Angles accept ``pi`` fraction spellings (pi, 2pi, pi/4, 3pi/4, -pi/2) next
to plain decimals.  Parsing collects every diagnostic instead of stopping
at the first problem.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .layout import ExperimentLayout, PhaseElement, SourceElement

GRAMMAR_VERSION = 1

_PI_RE = re.compile(
    r"^(?P<sign>[+-]?)(?P<coeff>\d+(?:\.\d*)?|\.\d+)?\*?pi(?:/(?P<div>\d+(?:\.\d*)?|\.\d+))?$"
)
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class DslError(ValueError):
    """Raised when a document cannot be parsed or compiled."""

    def __init__(self, diagnostics: Sequence["ParseDiagnostic"]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" or "warning"
    line: int
    column: int
    message: str
    excerpt: str

    def __str__(self) -> str:
        return f"{self.severity} at {self.line}:{self.column}: {self.message}"


@dataclass(frozen=True)
class SourceStmt:
    modes: tuple[str, str]
    gain: float


@dataclass(frozen=True)
class PhaseStmt:
    mode: str
    value: float | str


@dataclass(frozen=True)
class PostselectStmt:
    pattern: tuple[int, ...]


@dataclass(frozen=True)
class SweepStmt:
    symbol: str
    start: float
    stop: float
    steps: int


@dataclass(frozen=True)
class SetStmt:
    symbol: str
    value: float


Statement = SourceStmt | PhaseStmt | PostselectStmt | SweepStmt | SetStmt


@dataclass(frozen=True)
class ExperimentDoc:
    modes: tuple[str, ...]
    statements: tuple[Statement, ...]

    @property
    def postselect(self) -> tuple[int, ...] | None:
        for stmt in self.statements:
            if isinstance(stmt, PostselectStmt):
                return stmt.pattern
        return None


def parse_angle(text: str) -> float:
    """Parse a decimal or pi-fraction angle literal."""
    token = text.strip().lower()
    match = _PI_RE.match(token)
    if match:
        coeff = float(match.group("coeff")) if match.group("coeff") else 1.0
        if match.group("sign") == "-":
            coeff = -coeff
        value = coeff * math.pi
        if match.group("div"):
            value /= float(match.group("div"))
        return value
    return float(token)


def parse(text: str) -> tuple[ExperimentDoc | None, list[ParseDiagnostic]]:
    """Parse a document; returns (doc, diagnostics).

    ``doc`` is None when any error-severity diagnostic was produced.  The
    parser never raises on malformed input.
    """
    diagnostics: list[ParseDiagnostic] = []
    modes: list[str] = []
    statements: list[Statement] = []
    symbols: set[str] = set()
    saw_version = False
    saw_postselect = False

    def err(line_no: int, col: int, message: str, line: str):
        diagnostics.append(ParseDiagnostic("error", line_no, col, message, line))

    def warn(line_no: int, col: int, message: str, line: str):
        diagnostics.append(ParseDiagnostic("warning", line_no, col, message, line))

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip("\r")
        tokens = line.split()
        if not tokens:
            continue
        keyword = tokens[0]
        col = raw.index(keyword) + 1 if keyword in raw else 1

        if not saw_version:
            if keyword == "version":
                if len(tokens) != 2 or tokens[1] != str(GRAMMAR_VERSION):
                    err(line_no, col, f"expected 'version {GRAMMAR_VERSION}'", raw)
                saw_version = True
                continue
            err(line_no, col, f"first statement must be 'version {GRAMMAR_VERSION}'", raw)
            saw_version = True  # keep collecting diagnostics on the rest

        if keyword == "version":
            err(line_no, col, "duplicate version header", raw)
        elif keyword == "mode":
            if len(tokens) != 2 or not _NAME_RE.match(tokens[1]):
                err(line_no, col, "expected 'mode <name>'", raw)
            elif tokens[1] in modes:
                err(line_no, col, f"duplicate mode name {tokens[1]!r}", raw)
            else:
                modes.append(tokens[1])
        elif keyword == "source":
            if len(tokens) != 5 or tokens[3] != "gain":
                err(line_no, col, "expected 'source <m1> <m2> gain <g>'", raw)
                continue
            m1, m2 = tokens[1], tokens[2]
            ok = True
            for m in (m1, m2):
                if m not in modes:
                    err(line_no, raw.index(m) + 1 if m in raw else col,
                        f"undeclared mode {m!r}", raw)
                    ok = False
            if m1 == m2:
                err(line_no, raw.index(m2, raw.index(m1) + 1) + 1 if raw.count(m1) > 1 else col,
                    "source modes must be distinct", raw)
                ok = False
            try:
                gain = float(tokens[4])
            except ValueError:
                err(line_no, col, f"bad gain value {tokens[4]!r}", raw)
                continue
            if gain < 0:
                err(line_no, col, "gain must be non-negative", raw)
                ok = False
            if ok:
                statements.append(SourceStmt((m1, m2), gain))
        elif keyword == "phase":
            if len(tokens) != 3:
                err(line_no, col, "expected 'phase <mode> <symbol|angle>'", raw)
                continue
            mode = tokens[1]
            if mode not in modes:
                err(line_no, col, f"undeclared mode {mode!r}", raw)
                continue
            arg = tokens[2]
            try:
                value: float | str = parse_angle(arg)
            except ValueError:
                if _NAME_RE.match(arg):
                    value = arg
                    if arg in symbols:
                        err(line_no, col, f"phase symbol {arg!r} already bound to an element", raw)
                        continue
                    symbols.add(arg)
                else:
                    err(line_no, col, f"bad phase value {arg!r}", raw)
                    continue
            statements.append(PhaseStmt(mode, value))
        elif keyword == "postselect":
            if saw_postselect:
                err(line_no, col, "duplicate postselect statement", raw)
                continue
            saw_postselect = True
            try:
                pattern = tuple(int(tok) for tok in tokens[1:])
            except ValueError:
                err(line_no, col, "postselect takes integer photon numbers", raw)
                continue
            if len(pattern) != len(modes):
                err(line_no, col,
                    f"postselect lists {len(pattern)} numbers for {len(modes)} modes", raw)
                continue
            if any(n < 0 for n in pattern):
                err(line_no, col, "photon numbers must be non-negative", raw)
                continue
            statements.append(PostselectStmt(pattern))
        elif keyword == "sweep":
            body = tokens[1:]
            if len(body) == 7 and body[1] == "from":
                body = [body[0]] + body[2:]
            if len(body) != 6 or body[2] != "to" or body[4] != "steps":
                err(line_no, col, "expected 'sweep <symbol> from <a> to <b> steps <k>'", raw)
                continue
            symbol = body[0]
            if symbol not in symbols:
                warn(line_no, col, f"sweep of symbol {symbol!r} not used by any phase", raw)
            try:
                start = parse_angle(body[1])
                stop = parse_angle(body[3])
            except ValueError:
                err(line_no, col, "bad sweep bounds", raw)
                continue
            try:
                steps = int(body[5])
            except ValueError:
                err(line_no, col, f"bad step count {body[5]!r}", raw)
                continue
            if steps < 2:
                err(line_no, col, "sweep needs at least 2 steps", raw)
                continue
            statements.append(SweepStmt(symbol, start, stop, steps))
        elif keyword == "set":
            if len(tokens) != 3:
                err(line_no, col, "expected 'set <symbol> <value>'", raw)
                continue
            symbol = tokens[1]
            if symbol not in symbols:
                warn(line_no, col, f"set of symbol {symbol!r} not used by any phase", raw)
            try:
                value = parse_angle(tokens[2])
            except ValueError:
                err(line_no, col, f"bad value {tokens[2]!r}", raw)
                continue
            statements.append(SetStmt(symbol, value))
        else:
            err(line_no, col, f"unknown keyword {keyword!r}", raw)

    if not modes:
        diagnostics.append(ParseDiagnostic("error", 1, 1, "no modes declared", ""))
    if not saw_postselect:
        diagnostics.append(ParseDiagnostic("error", 1, 1, "no postselect statement", ""))

    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    return ExperimentDoc(tuple(modes), tuple(statements)), diagnostics


def _format_angle(value: float) -> str:
    """Prefer pi-fraction spellings the parser round-trips exactly."""
    for denom in (1, 2, 3, 4, 6, 8, 12):
        coeff = value * denom / math.pi
        if abs(coeff - round(coeff)) < 1e-12 and round(coeff) != 0:
            num = int(round(coeff))
            head = "" if num == 1 else ("-" if num == -1 else str(num))
            tail = "" if denom == 1 else f"/{denom}"
            return f"{head}pi{tail}"
    if value == 0:
        return "0"
    return repr(float(value))


def format_doc(doc: ExperimentDoc) -> str:
    """Pretty-print a document so that reparsing reproduces it structurally."""
    lines = [f"version {GRAMMAR_VERSION}"]
    for mode in doc.modes:
        lines.append(f"mode {mode}")
    for stmt in doc.statements:
        if isinstance(stmt, SourceStmt):
            lines.append(f"source {stmt.modes[0]} {stmt.modes[1]} gain {stmt.gain:g}")
        elif isinstance(stmt, PhaseStmt):
            value = stmt.value if isinstance(stmt.value, str) else _format_angle(stmt.value)
            lines.append(f"phase {stmt.mode} {value}")
        elif isinstance(stmt, PostselectStmt):
            lines.append("postselect " + " ".join(str(n) for n in stmt.pattern))
        elif isinstance(stmt, SweepStmt):
            lines.append(
                f"sweep {stmt.symbol} from {_format_angle(stmt.start)} "
                f"to {_format_angle(stmt.stop)} steps {stmt.steps}"
            )
        elif isinstance(stmt, SetStmt):
            lines.append(f"set {stmt.symbol} {_format_angle(stmt.value)}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CompiledExperiment:
    """Layout plus resolved settings: fixed values and sweep axes."""

    layout: ExperimentLayout
    fixed: dict[str, float]
    sweeps: dict[str, np.ndarray]

    def settings_grid(self) -> list[dict[str, float]]:
        """Cartesian product of sweep axes merged with the fixed values."""
        grid: list[dict[str, float]] = [dict(self.fixed)]
        for symbol, values in self.sweeps.items():
            grid = [
                {**settings, symbol: float(value)}
                for settings in grid
                for value in values
            ]
        return grid


def compile_doc(doc: ExperimentDoc, max_total_photons: int = 8) -> CompiledExperiment:
    """Lower a parsed document to an ExperimentLayout and settings axes."""
    diagnostics: list[ParseDiagnostic] = []
    elements: list[SourceElement | PhaseElement] = []
    symbols: list[str] = []
    for stmt in doc.statements:
        if isinstance(stmt, SourceStmt):
            elements.append(SourceElement(stmt.modes, stmt.gain))
        elif isinstance(stmt, PhaseStmt):
            elements.append(PhaseElement(stmt.mode, stmt.value))
            if isinstance(stmt.value, str):
                symbols.append(stmt.value)
    pattern = doc.postselect
    if pattern is None:
        diagnostics.append(ParseDiagnostic("error", 1, 1, "no postselect statement", ""))
        raise DslError(diagnostics)
    if sum(pattern) > max_total_photons:
        diagnostics.append(
            ParseDiagnostic(
                "error", 1, 1,
                f"postselect total {sum(pattern)} exceeds photon cap {max_total_photons}",
                "",
            )
        )
        raise DslError(diagnostics)
    fixed: dict[str, float] = {}
    sweeps: dict[str, np.ndarray] = {}
    for stmt in doc.statements:
        if isinstance(stmt, SetStmt):
            fixed[stmt.symbol] = stmt.value
        elif isinstance(stmt, SweepStmt):
            sweeps[stmt.symbol] = np.linspace(stmt.start, stmt.stop, stmt.steps)
    for symbol in symbols:
        if symbol not in fixed and symbol not in sweeps:
            diagnostics.append(
                ParseDiagnostic(
                    "error", 1, 1,
                    f"phase symbol {symbol!r} has neither a set value nor a sweep",
                    "",
                )
            )
    if diagnostics:
        raise DslError(diagnostics)
    layout = ExperimentLayout(doc.modes, tuple(elements), pattern)
    return CompiledExperiment(layout, fixed, sweeps)
