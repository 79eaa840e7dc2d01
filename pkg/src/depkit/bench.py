"""Measurement harness: single-core parsing-speed protocol, training-energy
metering, Pareto-front computation, and report emission.

Speed runs execute the parser several times over the corpus with the process
pinned to one hardware thread, reporting mean and sample standard deviation
of sentences/second. Energy readings come from cumulative microjoule
counters (RAPL-style files) with a background-power baseline subtracted, or
from a constant-power fallback. All timing goes through injectable clock and
sleep callables so the protocol is testable with fakes.
"""

from __future__ import annotations

import csv
import json
import os
import statistics
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from .errors import MeterError, TreeValidationError

REPORT_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# speed


@dataclass(frozen=True)
class SpeedReport:
    sents_per_sec_mean: float
    sents_per_sec_std: float
    runs: int
    batch_size: int
    thread_pinning: bool

    def to_dict(self) -> dict:
        return {
            "sents_per_sec_mean": self.sents_per_sec_mean,
            "sents_per_sec_std": self.sents_per_sec_std,
            "runs": self.runs,
            "batch_size": self.batch_size,
            "thread_pinning": self.thread_pinning,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpeedReport":
        return cls(
            d["sents_per_sec_mean"],
            d["sents_per_sec_std"],
            d["runs"],
            d["batch_size"],
            d["thread_pinning"],
        )


def _pin_to_one_core() -> set[int] | None:
    """Pin this process to its lowest allowed CPU; returns the previous
    affinity for restoring, or None when pinning is unsupported/denied."""
    try:
        allowed = os.sched_getaffinity(0)
        os.sched_setaffinity(0, {min(allowed)})
        return allowed
    except (AttributeError, OSError):
        return None


def measure_speed(
    parser: Callable[[Sequence], object],
    corpus: Sequence,
    runs: int = 5,
    batch_size: int = 256,
    pin_to_core: bool = True,
    clock: Callable[[], float] = time.perf_counter,
) -> SpeedReport:
    """Time ``runs`` full parses of ``corpus`` and report sentences/second.

    ``parser`` is called once per batch of sentences. One untimed warm-up
    parse precedes the timed runs; I/O must already be done by the caller
    (the corpus is in memory). When core pinning is unavailable the report
    proceeds with ``thread_pinning=False``.
    """
    if runs < 1:
        raise TreeValidationError("need at least one run")
    if not corpus:
        raise TreeValidationError("need a non-empty corpus")
    if batch_size < 1:
        raise TreeValidationError("batch size must be >= 1")
    batches = [corpus[i:i + batch_size] for i in range(0, len(corpus), batch_size)]
    previous = _pin_to_one_core() if pin_to_core else None
    pinned = previous is not None
    try:
        for batch in batches:  # warm-up
            parser(batch)
        speeds = []
        for _ in range(runs):
            t0 = clock()
            for batch in batches:
                parser(batch)
            dt = clock() - t0
            if dt <= 0:
                raise TreeValidationError("clock did not advance during a run")
            speeds.append(len(corpus) / dt)
    finally:
        if previous is not None:
            os.sched_setaffinity(0, previous)
    mean = statistics.fmean(speeds)
    std = statistics.stdev(speeds) if runs > 1 else 0.0
    return SpeedReport(mean, std, runs, batch_size, pinned and pin_to_core)


def macro_average(reports: Sequence[SpeedReport]) -> SpeedReport:
    """Unweighted mean of per-treebank mean speeds. A single report passes
    through unchanged; for several, the std is the sample std of the means."""
    if not reports:
        raise TreeValidationError("no speed reports to average")
    if len(reports) == 1:
        return replace(reports[0])
    means = [r.sents_per_sec_mean for r in reports]
    return SpeedReport(
        sents_per_sec_mean=statistics.fmean(means),
        sents_per_sec_std=statistics.stdev(means),
        runs=sum(r.runs for r in reports),
        batch_size=reports[0].batch_size,
        thread_pinning=all(r.thread_pinning for r in reports),
    )


# ---------------------------------------------------------------------------
# energy


ENERGY_SOURCES = ("hardware_counter", "constant_power_model")


@dataclass(frozen=True)
class EnergyReading:
    joules: float
    duration_s: float
    source: str
    samples: int
    partial: bool = False

    def to_dict(self) -> dict:
        return {
            "joules": self.joules,
            "duration_s": self.duration_s,
            "source": self.source,
            "samples": self.samples,
            "partial": self.partial,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyReading":
        return cls(d["joules"], d["duration_s"], d["source"], d["samples"],
                   d.get("partial", False))


@dataclass
class MeterConfig:
    """Energy meter configuration.

    ``hardware_counter`` reads cumulative-microjoule counter files (one value
    per package; wraparound corrected with ``counter_max_uj``), measures
    background power over an idle window first, and subtracts it from the
    task's gross energy. ``constant_power_model`` charges ``rated_watts``
    for the task's wall time. ``read_counter_uj``, ``clock`` and ``sleep``
    exist so tests can inject deterministic fakes.
    """

    source: str = "constant_power_model"
    rated_watts: float = 65.0
    counter_paths: tuple[str, ...] = ()
    counter_max_uj: float | None = None
    baseline_s: float = 5.0
    sample_interval_s: float = 0.25
    read_counter_uj: Callable[[], Sequence[float]] | None = None
    clock: Callable[[], float] = field(default=time.perf_counter, repr=False)
    sleep: Callable[[float], None] = field(default=time.sleep, repr=False)


def _file_counter_reader(paths: Sequence[str]) -> Callable[[], Sequence[float]]:
    def read() -> Sequence[float]:
        values = []
        for p in paths:
            with open(p) as fh:
                values.append(float(fh.read().strip()))
        return values

    return read


def read_counter_max_uj(counter_path: str) -> float | None:
    """RAPL convention: a max_energy_range_uj file next to energy_uj."""
    sibling = Path(counter_path).parent / "max_energy_range_uj"
    try:
        return float(sibling.read_text().strip())
    except (OSError, ValueError):
        return None


def _wrap_delta(before: Sequence[float], after: Sequence[float],
                max_uj: float | None) -> float:
    total = 0.0
    for b, a in zip(before, after):
        d = a - b
        if d < 0:
            d = d + max_uj if max_uj else 0.0
        total += d
    return total


def _background_watts(read, config: MeterConfig) -> tuple[float, int]:
    """Average background power over the idle window, sampling the counters
    at the configured interval so wraparound stays correctable."""
    if config.baseline_s <= 0:
        return 0.0, 0
    t0 = config.clock()
    prev = read()
    samples = 1
    total_uj = 0.0
    elapsed = 0.0
    while elapsed < config.baseline_s:
        step = min(config.sample_interval_s, config.baseline_s - elapsed)
        config.sleep(step)
        cur = read()
        samples += 1
        total_uj += _wrap_delta(prev, cur, config.counter_max_uj)
        prev = cur
        elapsed = config.clock() - t0
    if elapsed <= 0:
        return 0.0, samples
    return total_uj / 1e6 / elapsed, samples


def meter_energy(task: Callable[[], object], config: MeterConfig | None = None) -> EnergyReading:
    """Run ``task`` and report the energy it consumed.

    Hardware mode: background power (pre-measured over the idle window) is
    subtracted from the gross counter delta across the task; negative net
    energy clamps to zero. A counter read failure mid-task aborts the
    reading and reports a partial result flagged as such.
    """
    if config is None:
        config = MeterConfig()
    if config.source == "constant_power_model":
        t0 = config.clock()
        task()
        duration = config.clock() - t0
        return EnergyReading(config.rated_watts * duration, duration,
                             "constant_power_model", 0)
    if config.source != "hardware_counter":
        raise MeterError(f"unknown energy source {config.source!r}")
    read = config.read_counter_uj or (
        _file_counter_reader(config.counter_paths) if config.counter_paths else None
    )
    if read is None:
        raise MeterError("hardware_counter source needs counter paths or a reader")

    bg_watts, samples = _background_watts(read, config)
    before = read()
    samples += 1
    t0 = config.clock()
    task()
    duration = config.clock() - t0
    try:
        after = read()
    except Exception:
        return EnergyReading(0.0, duration, "hardware_counter", samples, partial=True)
    samples += 1
    gross = _wrap_delta(before, after, config.counter_max_uj) / 1e6
    net = max(0.0, gross - bg_watts * duration)
    if duration == 0:
        net = 0.0
    return EnergyReading(net, duration, "hardware_counter", samples)


# ---------------------------------------------------------------------------
# run records and Pareto fronts


@dataclass(frozen=True)
class RunRecord:
    """One measured configuration: a point for the fronts."""

    system: str
    size_axis: str
    treebank: str
    las: float
    uas: float
    speed: SpeedReport | None = None
    train_energy: EnergyReading | None = None
    train_time_s: float = 0.0

    @property
    def record_id(self) -> str:
        return f"{self.system}-{self.size_axis}-{self.treebank}"

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "size_axis": self.size_axis,
            "treebank": self.treebank,
            "las": self.las,
            "uas": self.uas,
            "speed": self.speed.to_dict() if self.speed else None,
            "train_energy": self.train_energy.to_dict() if self.train_energy else None,
            "train_time_s": self.train_time_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            system=d["system"],
            size_axis=d["size_axis"],
            treebank=d["treebank"],
            las=d["las"],
            uas=d["uas"],
            speed=SpeedReport.from_dict(d["speed"]) if d.get("speed") else None,
            train_energy=EnergyReading.from_dict(d["train_energy"])
            if d.get("train_energy")
            else None,
            train_time_s=d.get("train_time_s", 0.0),
        )


ORIENTATIONS = ("maximize", "minimize")


@dataclass(frozen=True)
class ParetoPoint:
    x: float
    y: float
    orientation: tuple[str, str] = ("maximize", "maximize")
    tag: str = ""

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "orientation": list(self.orientation),
            "tag": self.tag,
        }


def pareto_front(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated subset, sorted by x. Point p dominates q when p is at
    least as good on both axes (per the shared orientation) and strictly
    better on one; duplicates of a front point all survive.

    Single descending sweep over x groups, O(n log n); the tests check it
    against the quadratic pairwise filter.
    """
    if not points:
        return []
    orientation = points[0].orientation
    for p in points:
        if p.orientation != orientation:
            raise TreeValidationError("mixed axis orientations in one front")
        if any(o not in ORIENTATIONS for o in p.orientation):
            raise TreeValidationError(f"unknown orientation {p.orientation!r}")
    sx = 1.0 if orientation[0] == "maximize" else -1.0
    sy = 1.0 if orientation[1] == "maximize" else -1.0
    canon = [(sx * p.x, sy * p.y, i) for i, p in enumerate(points)]
    canon.sort(key=lambda t: -t[0])

    keep: list[int] = []
    best_y = float("-inf")
    i = 0
    while i < len(canon):
        j = i
        group_max = float("-inf")
        while j < len(canon) and canon[j][0] == canon[i][0]:
            group_max = max(group_max, canon[j][1])
            j += 1
        if group_max > best_y:
            keep.extend(idx for cx, cy, idx in canon[i:j] if cy == group_max)
            best_y = group_max
        i = j
    keep.sort(key=lambda idx: (points[idx].x, idx))
    return [points[idx] for idx in keep]


def build_fronts(records: Sequence[RunRecord]) -> dict:
    """Per-system and overall fronts for accuracy-speed and accuracy-energy,
    plus the energy-vs-time scatter."""

    def front_block(points: list[ParetoPoint]) -> dict:
        systems = sorted({p.tag.split("-", 1)[0] for p in points})
        return {
            "overall": [p.to_dict() for p in pareto_front(points)],
            "per_system": {
                s: [
                    p.to_dict()
                    for p in pareto_front([q for q in points if q.tag.split("-", 1)[0] == s])
                ]
                for s in systems
            },
        }

    speed_points = [
        ParetoPoint(r.speed.sents_per_sec_mean, r.las, ("maximize", "maximize"), r.record_id)
        for r in records
        if r.speed is not None
    ]
    energy_points = [
        ParetoPoint(r.train_energy.joules, r.las, ("minimize", "maximize"), r.record_id)
        for r in records
        if r.train_energy is not None
    ]
    scatter = [
        {"tag": r.record_id, "train_time_s": r.train_time_s,
         "joules": r.train_energy.joules}
        for r in records
        if r.train_energy is not None
    ]
    return {
        "accuracy_speed": front_block(speed_points),
        "accuracy_energy": front_block(energy_points),
        "energy_time_scatter": scatter,
    }


CSV_COLUMNS = (
    "system", "size_axis", "treebank", "las", "uas",
    "sents_per_sec_mean", "sents_per_sec_std",
    "train_joules", "train_seconds", "energy_source",
)


def emit_report(records: Sequence[RunRecord], fronts: dict | None,
                out_dir: str) -> dict[str, str]:
    """Write ``report.json`` (records + fronts, versioned schema) and two
    CSVs: one row per record, and one row per front membership. Returns the
    written paths keyed by artifact name."""
    if not records:
        raise TreeValidationError("no records to report")
    if fronts is None:
        fronts = build_fronts(records)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "records": [r.to_dict() for r in records],
        "fronts": fronts,
    }
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")

    records_path = out / "records.csv"
    with open(records_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.system, r.size_axis, r.treebank, repr(r.las), repr(r.uas),
                repr(r.speed.sents_per_sec_mean) if r.speed else "",
                repr(r.speed.sents_per_sec_std) if r.speed else "",
                repr(r.train_energy.joules) if r.train_energy else "",
                repr(r.train_time_s),
                r.train_energy.source if r.train_energy else "",
            ])

    fronts_path = out / "fronts.csv"
    with open(fronts_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("front", "scope", "tag", "x", "y"))
        for name in ("accuracy_speed", "accuracy_energy"):
            block = fronts[name]
            for p in block["overall"]:
                writer.writerow((name, "overall", p["tag"], repr(p["x"]), repr(p["y"])))
            for system, pts in sorted(block["per_system"].items()):
                for p in pts:
                    writer.writerow((name, system, p["tag"], repr(p["x"]), repr(p["y"])))

    return {
        "report": str(report_path),
        "records_csv": str(records_path),
        "fronts_csv": str(fronts_path),
    }
