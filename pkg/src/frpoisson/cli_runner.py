"""Run scenario checks and report on them.

``frpoisson check --scenario FILE`` loads a scenario (any fsspec URL or a
built-in name), runs its checks and prints a text or JSON report. The exit
code is 0 when every check passes, 1 when one fails and 2 when the scenario
cannot be loaded.
"""

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata

import fsspec

from .checks import FAIL, CheckContext, CheckResult, run_check
from .group_numerics import NumericsConfig
from .lie_core import InvariantError
from .scenario import (
    CHECKS,
    SCHEMA_VERSION,
    Scenario,
    ScenarioError,
    UnknownCheckError,
    builtin_scenarios,
    load_scenario,
    validate_checks,
)

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_LOAD_ERROR = 2


@dataclass
class Report:
    """Verdicts of one run, in registry order.

    ``timings`` and ``started_at`` are not part of the deterministic payload.
    """

    scenario: str
    config: NumericsConfig
    n_max: int
    results: list[CheckResult] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    started_at: str = ""
    wall_time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.passed else EXIT_FAILED

    def payload(self) -> dict:
        return {
            "scenario": self.scenario,
            "config": {
                "tol": self.config.tol,
                "samples": self.config.samples,
                "seed": self.config.seed,
                "scale": self.config.scale,
                "n_max": self.n_max,
            },
            "checks": [r.to_json() for r in self.results],
            "passed": self.passed,
        }

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "report": self.payload(),
            "envelope": {
                "started_at": self.started_at,
                "wall_time_s": self.wall_time_s,
                "check_time_s": self.timings,
            },
        }


def resolve_config(scenario: Scenario, **flags) -> NumericsConfig:
    """Flags, then scenario fields, then ``FRPOISSON_*`` variables, then defaults."""
    fields = {
        "tol": scenario.tol,
        "samples": scenario.samples,
        "seed": scenario.seed,
        "scale": scenario.scale,
    }
    for name, value in fields.items():
        var = NumericsConfig._env[name]
        if value is not None and os.getenv(var) is not None and flags.get(name) is None:
            _logger.warning(
                "%s is shadowed by the %r field of scenario %s", var, name, scenario.name
            )
    return NumericsConfig.from_env(**fields).with_overrides(**flags)


def run_checks(
    scenario: Scenario,
    config: NumericsConfig | None = None,
    checks=None,
    jobs: int = 1,
) -> Report:
    """Run ``checks`` (default: the scenario's own list) and collect a :class:`Report`.

    Raises
    ------
    UnknownCheckError
        If a check name is not in the registry.
    """
    names = validate_checks(scenario.checks if checks is None else checks)
    ordered = [name for name in CHECKS if name in set(names)]
    config = config or resolve_config(scenario)
    report = Report(scenario.name, config, scenario.n_max)
    report.started_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    ctx = CheckContext(scenario, config)
    start = time.perf_counter()

    def timed(name):
        t0 = time.perf_counter()
        result = run_check(name, ctx)
        return result, time.perf_counter() - t0

    if jobs > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(timed, ordered))
    else:
        outcomes = [timed(name) for name in ordered]
    for name, (result, elapsed) in zip(ordered, outcomes, strict=True):
        report.results.append(result)
        report.timings[name] = round(elapsed, 6)
    report.wall_time_s = round(time.perf_counter() - start, 6)
    _logger.info(
        "Scenario %s: %d check(s), %s",
        scenario.name, len(report.results), "pass" if report.passed else "FAIL",
    )
    return report


def _format_text(report: Report) -> str:
    cfg = report.config
    lines = [
        f"scenario {report.scenario} "
        f"(seed {cfg.seed}, tol {cfg.tol:g}, samples {cfg.samples})"
    ]
    width = max((len(r.name) for r in report.results), default=0)
    for r in report.results:
        line = f"  {r.name:<{width}}  {r.verdict}"
        if r.witness is not None:
            line += f"  witness {r.witness:.3e}"
        if "vacuous" in r.details:
            line += f"  (vacuous: {r.details['vacuous']})"
        lines.append(line)
        if r.verdict == FAIL:
            for key, detail in sorted(r.details.items()):
                if isinstance(detail, dict) and (
                    detail.get("holds") is False or detail.get("zero") is False
                ):
                    lines.append(f"      {key}: {json.dumps(detail, sort_keys=True)}")
                elif key == "error":
                    lines.append(f"      error: {detail}")
    total = len(report.results)
    good = sum(r.passed for r in report.results)
    lines.append(f"result: {'PASS' if report.passed else 'FAIL'} ({good}/{total})")
    return "\n".join(lines) + "\n"


def emit_report(report: Report, format: str = "text", output: str | None = None) -> str:
    """Render ``report`` as ``text`` or ``json``; write it to ``output`` if given.

    The ``report`` member of the JSON form is byte-identical across runs with
    the same scenario and seed.
    """
    if format == "text":
        text = _format_text(report)
    elif format == "json":
        text = json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"
    else:
        raise ValueError(f"Unknown report format {format!r}; use 'text' or 'json'")
    if output:
        with fsspec.open(output, "w", encoding="utf-8") as f:
            f.write(text)
        _logger.info("Report written to %s", output)
    return text


def _version() -> str:
    try:
        return metadata.version("frpoisson")
    except metadata.PackageNotFoundError:
        return "unknown"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frpoisson",
        description="Verify Fock-Rosly Poisson structures on moduli of flat connections.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    parser.add_argument(
        "--log-level",
        default=os.getenv("FRPOISSON_LOG_LEVEL", "WARNING"),
        help="Logging level (default: WARNING, env FRPOISSON_LOG_LEVEL)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="Run the checks of a scenario")
    check.add_argument("--scenario", required=True, help="Scenario URL, path or built-in name")
    check.add_argument("--tol", type=float, help="Field-zero tolerance")
    check.add_argument("--samples", type=int, help="Number of sampled points")
    check.add_argument("--seed", type=int, help="Master seed of the sampled points")
    check.add_argument("--scale", type=float, help="Coefficient range of sampled points")
    check.add_argument(
        "--check",
        action="append",
        dest="checks",
        metavar="NAME",
        help=f"Run this check instead of the scenario's list; one of {', '.join(CHECKS)}",
    )
    check.add_argument("--format", choices=("text", "json"), default="text")
    check.add_argument("--output", help="Write the report to this URL instead of stdout")
    check.add_argument("--jobs", type=int, default=1, help="Checks run concurrently")

    sub.add_parser("scenarios", help="List the built-in scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.command == "scenarios":
        for name in builtin_scenarios():
            print(name)
        return EXIT_OK

    try:
        scenario = load_scenario(args.scenario)
    except (ScenarioError, InvariantError, FileNotFoundError, json.JSONDecodeError) as e:
        _logger.error("Cannot load scenario %s: %s", args.scenario, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_LOAD_ERROR

    try:
        config = resolve_config(
            scenario, tol=args.tol, samples=args.samples, seed=args.seed, scale=args.scale
        )
        report = run_checks(scenario, config, checks=args.checks, jobs=max(1, args.jobs))
    except (UnknownCheckError, ValueError) as e:
        _logger.error("Cannot run scenario %s: %s", scenario.name, e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_LOAD_ERROR

    text = emit_report(report, args.format, args.output)
    if not args.output:
        sys.stdout.write(text)
    if not report.passed:
        failed = [r.name for r in report.results if not r.passed]
        _logger.error("Failing checks: %s", ", ".join(failed))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
