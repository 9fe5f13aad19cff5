"""Machine-checkable claim reports and their CSV/JSON round-trip codecs.

A :class:`SuiteReport` records one verified claim: what was observed, what
was expected, the tolerance in force, and the Monte Carlo standard error
when one exists.  A report only fails when the observation is genuinely out
of tolerance (or a strict structural condition, such as monotonicity of
Cauchy gaps, is violated); tolerances are never widened to force a pass.

Floats are serialised with 17 significant digits so that parsing an emitted
file reproduces the in-memory report exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
INSUFFICIENT = "insufficient-power"

_FLOAT_FMT = "%.17g"


def _as_tuple(x) -> tuple[float, ...]:
    if isinstance(x, (int, float)):
        return (float(x),)
    return tuple(float(v) for v in x)


@dataclass
class SuiteReport:
    claim_id: str
    status: str
    observed: tuple[float, ...]
    expected: tuple[float, ...]
    tolerance: float
    standard_error: float | None = None
    runtime_ms: float = 0.0

    def __post_init__(self):
        self.observed = _as_tuple(self.observed)
        self.expected = _as_tuple(self.expected)
        if self.status not in (PASS, FAIL, INSUFFICIENT):
            raise ValueError(f"bad status {self.status!r}")
        if len(self.observed) != len(self.expected):
            raise ValueError("observed and expected must have equal length")


def two_sided_report(
    claim_id: str,
    observed,
    expected,
    tolerance: float,
    standard_error: float | None = None,
    runtime_ms: float = 0.0,
    structural_ok: bool = True,
    insufficient: bool = False,
) -> SuiteReport:
    """Report passing when max|observed - expected| <= effective tolerance.

    For Monte Carlo claims the effective tolerance is
    max(tolerance, 4 * standard_error); ``structural_ok=False`` marks a
    violated side condition (for example an ordering requirement) and
    forces a fail.
    """
    obs, exp = _as_tuple(observed), _as_tuple(expected)
    eff = tolerance
    if standard_error is not None:
        eff = max(eff, 4.0 * standard_error)
    dev = max(abs(o - e) for o, e in zip(obs, exp)) if obs else 0.0
    if insufficient:
        status = INSUFFICIENT
    elif dev <= eff and structural_ok:
        status = PASS
    else:
        status = FAIL
    return SuiteReport(claim_id, status, obs, exp, tolerance, standard_error, runtime_ms)


def bound_report(
    claim_id: str,
    slack,
    tolerance: float,
    standard_error: float | None = None,
    runtime_ms: float = 0.0,
    insufficient: bool = False,
) -> SuiteReport:
    """Report for one-sided claims: passes when every slack >= -tolerance.

    ``slack`` holds margins that should be nonnegative (bound satisfied);
    expected is identically zero, so a fail implies the recorded slack is
    genuinely below -tolerance.
    """
    s = _as_tuple(slack)
    if insufficient:
        status = INSUFFICIENT
    else:
        status = PASS if all(v >= -tolerance for v in s) else FAIL
    zeros = tuple(0.0 for _ in s)
    return SuiteReport(claim_id, status, s, zeros, tolerance, standard_error, runtime_ms)


def _fmt(x: float) -> str:
    return _FLOAT_FMT % x


def _fmt_seq(xs: tuple[float, ...]) -> str:
    return "|".join(_fmt(x) for x in xs)


def _parse_seq(s: str) -> tuple[float, ...]:
    if s == "":
        return ()
    return tuple(float(p) for p in s.split("|"))


CSV_FIELDS = (
    "claim_id",
    "status",
    "observed",
    "expected",
    "tolerance",
    "standard_error",
    "runtime_ms",
)


def reports_to_csv(reports: list[SuiteReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in reports:
        writer.writerow(
            [
                r.claim_id,
                r.status,
                _fmt_seq(r.observed),
                _fmt_seq(r.expected),
                _fmt(r.tolerance),
                "" if r.standard_error is None else _fmt(r.standard_error),
                _fmt(r.runtime_ms),
            ]
        )
    return buf.getvalue()


def reports_from_csv(text: str) -> list[SuiteReport]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    for row in reader:
        if not row:
            continue
        out.append(
            SuiteReport(
                claim_id=row[0],
                status=row[1],
                observed=_parse_seq(row[2]),
                expected=_parse_seq(row[3]),
                tolerance=float(row[4]),
                standard_error=None if row[5] == "" else float(row[5]),
                runtime_ms=float(row[6]),
            )
        )
    return out


def report_to_dict(r: SuiteReport) -> dict:
    # key order is fixed by construction; json.dumps preserves it
    return {
        "claim_id": r.claim_id,
        "status": r.status,
        "observed": [_fmt(x) for x in r.observed],
        "expected": [_fmt(x) for x in r.expected],
        "tolerance": _fmt(r.tolerance),
        "standard_error": None if r.standard_error is None else _fmt(r.standard_error),
        "runtime_ms": _fmt(r.runtime_ms),
    }


def report_from_dict(d: dict) -> SuiteReport:
    return SuiteReport(
        claim_id=d["claim_id"],
        status=d["status"],
        observed=tuple(float(x) for x in d["observed"]),
        expected=tuple(float(x) for x in d["expected"]),
        tolerance=float(d["tolerance"]),
        standard_error=None
        if d["standard_error"] is None
        else float(d["standard_error"]),
        runtime_ms=float(d["runtime_ms"]),
    )


def reports_to_json(reports: list[SuiteReport], config: dict | None = None, version: str = "") -> str:
    payload = {
        "config": config or {},
        "reports": [report_to_dict(r) for r in reports],
        "version": version,
    }
    return json.dumps(payload, indent=2) + "\n"


def reports_from_json(text: str) -> tuple[list[SuiteReport], dict, str]:
    payload = json.loads(text)
    reports = [report_from_dict(d) for d in payload["reports"]]
    return reports, payload.get("config", {}), payload.get("version", "")
