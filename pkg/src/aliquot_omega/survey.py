"""Survey driver: shard [1, x_max] into segments, summarize each segment for
every checkpoint, append one checkpoint line per finished segment, and fold
the lines into per-checkpoint statistics.

Segments are processed by a thread pool (the compiled kernels release the
GIL).  Results are consumed in segment order, so the checkpoint file is
always a contiguous prefix of [1, x_max] and the final reduction is a
left fold sorted by ``lo``; output is independent of segment size and
worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .arith import DEFAULT_SEGMENT, SPF_BUDGET, SpfTable, sieve_spf
from .errors import (
    CheckpointCorrupt,
    CheckpointMismatch,
    ConfigError,
    CongruenceInapplicable,
    IntegrityError,
    OutputError,
)
from .exceptional import MODES, ConditionTally, Thresholds, congruence_check
from .records import iter_records, reference_record, segment_records, truncation_window
from .stats import POPULATIONS, MomentSummary, normalize, summarize_segment, z_histogram

log = logging.getLogger(__name__)

ENGINE_VERSION = "1.0"
DEFAULT_LADDER = (10**4, 10**5, 10**6, 10**7)
STAT_COLUMNS = ("mean_ratio", "var_ratio", "second_moment_ratio", "gap_mean",
                "gap_sq_ratio", "ks_stat")
CHECKPOINT_NAME = "checkpoint.jsonl"
CROSSCHECK_NAME = "crosscheck.json"


@dataclass(frozen=True)
class SurveyConfig:
    x_max: int
    checkpoints: tuple[int, ...] | None = None
    segment_size: int = DEFAULT_SEGMENT
    workers: int = 1
    threshold_mode: str = "literal"
    alpha: float = 0.25
    f_bound: float = 10.0
    d_slack: Fraction = Fraction(1)
    out_dir: Path = Path("survey-out")
    output_format: str = "csv"
    seed: int = 0
    eps_grid: tuple[float, ...] = (0.25, 0.5)
    cross_checks: int = 32

    def __post_init__(self):
        if self.x_max < 1:
            raise ConfigError("x_max must be >= 1")
        if self.x_max + 1 > SPF_BUDGET:
            raise ConfigError(f"x_max={self.x_max} exceeds the spf memory budget")
        cps = self.checkpoints
        if cps is None:
            cps = tuple(c for c in DEFAULT_LADDER if c < self.x_max) + (self.x_max,)
        cps = tuple(int(c) for c in cps)
        if not cps:
            raise ConfigError("at least one checkpoint is required")
        if list(cps) != sorted(set(cps)):
            raise ConfigError("checkpoints must be strictly ascending")
        if cps[0] < 1 or cps[-1] > self.x_max:
            raise ConfigError("checkpoints must lie in [1, x_max]")
        object.__setattr__(self, "checkpoints", cps)
        if self.segment_size < 1000:
            raise ConfigError("segment_size must be >= 1000")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.threshold_mode not in MODES:
            raise ConfigError(f"threshold mode must be one of {MODES}")
        if self.output_format not in ("csv", "jsonl"):
            raise ConfigError("format must be csv or jsonl")
        if not self.eps_grid or any(e < 0 for e in self.eps_grid):
            raise ConfigError("eps grid needs nonnegative values")
        object.__setattr__(self, "d_slack", Fraction(self.d_slack).limit_denominator(64))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        try:
            ths = self.thresholds()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        slack = ths[-1].d_slack
        if slack.numerator * self.x_max**2 >= 2**63 or 2 * slack.denominator * self.x_max**2 >= 2**63:
            raise ConfigError("d_slack too large for exact 64-bit evaluation of condition D")

    def thresholds(self) -> list[Thresholds]:
        if self.threshold_mode == "literal":
            return [Thresholds.literal(x) for x in self.checkpoints]
        return [Thresholds.override(x, self.alpha, self.f_bound, self.d_slack)
                for x in self.checkpoints]

    def config_hash(self) -> str:
        """Hash of everything that changes checkpoint contents.

        Segment size, workers, output format and the eps grid only affect
        scheduling or presentation, so a run may resume under different ones.
        """
        key = {
            "x_max": self.x_max,
            "checkpoints": list(self.checkpoints),
            "threshold_mode": self.threshold_mode,
            "engine_version": ENGINE_VERSION,
        }
        if self.threshold_mode == "override":
            key.update(alpha=repr(float(self.alpha)), f_bound=repr(float(self.f_bound)),
                       d_slack=str(self.d_slack))
        blob = json.dumps(key, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SegmentResult:
    """One checkpoint line: summaries and tallies for every checkpoint x >= lo."""

    lo: int
    hi: int
    entries: tuple[tuple[MomentSummary, ConditionTally], ...]
    config_hash: str
    engine_version: str = ENGINE_VERSION

    def to_json(self) -> str:
        doc = {
            "lo": self.lo,
            "hi": self.hi,
            "engine_version": self.engine_version,
            "config_hash": self.config_hash,
            "checkpoints": [{"summary": s.to_dict(), "tally": t.to_dict()} for s, t in self.entries],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> SegmentResult:
        doc = json.loads(line)
        entries = tuple(
            (MomentSummary.from_dict(e["summary"]), ConditionTally.from_dict(e["tally"]))
            for e in doc["checkpoints"]
        )
        return cls(int(doc["lo"]), int(doc["hi"]), entries, str(doc["config_hash"]),
                   str(doc["engine_version"]))


@dataclass
class SurveyOutput:
    config: SurveyConfig
    summaries: dict[int, MomentSummary]
    tallies: dict[int, ConditionTally]
    rows: list[dict]
    checkpoint_path: Path
    result_path: Path | None
    segments_computed: int
    segments_reused: int
    complete: bool
    crosscheck: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# checkpoint file
# ---------------------------------------------------------------------------


def load_checkpoint(path: Path, config: SurveyConfig) -> list[SegmentResult]:
    """Parse and validate a checkpoint file; a torn final line is dropped."""
    path = Path(path)
    if not path.exists():
        return []
    raw = path.read_text()
    *lines, tail = raw.split("\n")
    expected_hash = config.config_hash()
    out: list[SegmentResult] = []
    next_lo = 1
    for i, line in enumerate(lines, 1):
        try:
            seg = SegmentResult.from_json(line)
        except (ValueError, KeyError, TypeError) as exc:
            raise CheckpointCorrupt(f"{path}:{i}: unreadable checkpoint line ({exc})") from exc
        if seg.config_hash != expected_hash or seg.engine_version != ENGINE_VERSION:
            raise CheckpointMismatch(
                f"{path}:{i}: written under config {seg.config_hash} "
                f"(engine {seg.engine_version}), current is {expected_hash}")
        if seg.lo != next_lo or not seg.lo < seg.hi <= config.x_max + 1:
            raise CheckpointCorrupt(f"{path}:{i}: segment [{seg.lo}, {seg.hi}) breaks contiguity")
        want = [x for x in config.checkpoints if x >= seg.lo]
        if [s.x for s, _ in seg.entries] != want:
            raise CheckpointCorrupt(f"{path}:{i}: checkpoint set does not match the config")
        next_lo = seg.hi
        out.append(seg)
    if tail:
        # torn final write: drop it so appends stay line-aligned
        log.warning("dropping incomplete final checkpoint line in %s", path)
        path.write_text("".join(ln + "\n" for ln in lines))
    return out


def _segments(lo: int, x_max: int, size: int) -> list[tuple[int, int]]:
    out = []
    while lo <= x_max:
        hi = min(x_max + 1, lo + size)
        out.append((lo, hi))
        lo = hi
    return out


def _compute_segment(lo: int, hi: int, spf: SpfTable, ths: Sequence[Thresholds],
                     config_hash: str) -> SegmentResult:
    active = [t for t in ths if t.x >= lo]
    seg = segment_records(lo, hi, spf, active)
    return SegmentResult(lo, hi, tuple(summarize_segment(seg)), config_hash)


def fold(segments: Sequence[SegmentResult], config: SurveyConfig):
    summaries = {x: MomentSummary(x) for x in config.checkpoints}
    tallies = {x: ConditionTally() for x in config.checkpoints}
    for seg in sorted(segments, key=lambda s: s.lo):
        for s, t in seg.entries:
            summaries[s.x] = summaries[s.x].merge(s)
            tallies[s.x] = tallies[s.x].merge(t)
    return summaries, tallies


# ---------------------------------------------------------------------------
# output rows
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else format(v, ".10g")
    return str(v)


def eps_label(eps: float) -> str:
    return f"eps_exceed_{eps:g}"


def result_columns(eps_grid: Sequence[float]) -> list[str]:
    cols = ["x", "count_total", "count_in_E", "count_degenerate"]
    for pop in POPULATIONS:
        cols += [f"{c}_{pop}" for c in STAT_COLUMNS]
        cols += [f"{eps_label(e)}_{pop}" for e in eps_grid]
    cols += ["density_E", "threshold_mode"]
    return cols


def result_row(summary: MomentSummary, tally: ConditionTally, config: SurveyConfig) -> dict:
    row: dict = {
        "x": summary.x,
        "count_total": summary.count_total,
        "count_in_E": summary.count_in_E,
        "count_degenerate": summary.count_degenerate,
    }
    for pop in POPULATIONS:
        if summary.population(pop).count == 0:
            for c in STAT_COLUMNS:
                row[f"{c}_{pop}"] = math.nan
            for e in config.eps_grid:
                row[f"{eps_label(e)}_{pop}"] = math.nan
            continue
        st = normalize(summary, pop)
        for c in STAT_COLUMNS:
            row[f"{c}_{pop}"] = getattr(st, c)
        for e in config.eps_grid:
            row[f"{eps_label(e)}_{pop}"] = st.epsilon_exceed(e)
    row["density_E"] = tally.density
    row["threshold_mode"] = config.threshold_mode
    return row


def render_csv(rows: Sequence[dict], eps_grid: Sequence[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = result_columns(eps_grid)
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in cols])
    return buf.getvalue()


def render_jsonl(rows: Sequence[dict], summaries: dict[int, MomentSummary],
                 tallies: dict[int, ConditionTally], eps_grid: Sequence[float]) -> str:
    out = []
    for row in rows:
        x = row["x"]
        doc = {c: (None if isinstance(v, float) and math.isnan(v) else v) for c, v in row.items()}
        s = summaries[x]
        doc["tally"] = tallies[x].to_dict()
        doc["summary"] = s.to_dict()
        doc["z_histogram"] = {p: z_histogram(s.population(p).omega_counts, s.log2x)
                              for p in POPULATIONS}
        out.append(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in out)


# ---------------------------------------------------------------------------
# sampled cross-checks
# ---------------------------------------------------------------------------


def cross_check(config: SurveyConfig, spf: SpfTable) -> dict:
    """Recompute sampled records through the plain-Python route and run the
    s(mP) congruence on sampled (n, p) pairs outside E(x)."""
    rng = random.Random(config.seed)
    ths = config.thresholds()
    report = {"records": 0, "record_mismatches": 0, "congruence_checked": 0,
              "congruence_skipped": 0, "congruence_failures": 0}
    for _ in range(config.cross_checks):
        n = rng.randint(1, config.checkpoints[-1])
        th = next(t for t in ths if t.x >= n)
        seg = segment_records(n, n + 1, spf, [th])
        fast = next(iter_records(seg, 0))
        slow = reference_record(n, th)
        report["records"] += 1
        if fast != slow:
            report["record_mismatches"] += 1
            log.error("record mismatch at n=%d: %s vs %s", n, fast, slow)
            continue
        if fast.flags.in_exceptional:
            continue
        lo, hi = truncation_window(th.x)
        p = _random_prime(rng, max(3, math.floor(lo) + 1), max(3, int(hi)))
        try:
            ok = congruence_check(n, fast.flags, p)
        except CongruenceInapplicable:
            report["congruence_skipped"] += 1
            continue
        report["congruence_checked"] += 1
        report["congruence_failures"] += not ok
    return report


def _random_prime(rng: random.Random, lo: int, hi: int) -> int:
    from .factor64 import is_prime_u64

    hi = max(hi, lo)
    while True:
        v = rng.randint(lo, hi)
        if is_prime_u64(v):
            return v
        if hi - lo < 2:
            hi += 10


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _prepare_out_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"output directory {path} is not writable: {exc}") from exc


def run_survey(config: SurveyConfig, resume: bool = False,
               checkpoint_path: Path | None = None,
               max_segments: int | None = None) -> SurveyOutput:
    """Run (or continue) a survey and write the result table.

    ``max_segments`` stops after computing that many new segments, leaving a
    valid partial checkpoint; no result table is written in that case.
    """
    out_dir = config.out_dir
    _prepare_out_dir(out_dir)
    ckpt = Path(checkpoint_path) if checkpoint_path else out_dir / CHECKPOINT_NAME
    done = load_checkpoint(ckpt, config) if resume else []
    try:
        if not resume:
            ckpt.write_text("")
    except OSError as exc:
        raise OutputError(f"cannot write checkpoint {ckpt}: {exc}") from exc

    start = done[-1].hi if done else 1
    todo = _segments(start, config.x_max, config.segment_size)
    if max_segments is not None:
        todo = todo[:max_segments]
    ths = config.thresholds()
    chash = config.config_hash()
    spf = sieve_spf(max(config.x_max, 2))
    log.info("survey x_max=%d: %d segments reused, %d to compute",
             config.x_max, len(done), len(todo))

    computed: list[SegmentResult] = []
    try:
        sink = ckpt.open("a")
    except OSError as exc:
        raise OutputError(f"cannot append to checkpoint {ckpt}: {exc}") from exc
    with sink:
        def work(bounds):
            return _compute_segment(bounds[0], bounds[1], spf, ths, chash)

        if config.workers == 1:
            results = map(work, todo)
            pool = None
        else:
            pool = ThreadPoolExecutor(max_workers=config.workers)
            results = pool.map(work, todo)
        try:
            for res in results:
                sink.write(res.to_json() + "\n")
                sink.flush()
                computed.append(res)
                log.debug("segment [%d, %d) done", res.lo, res.hi)
        finally:
            if pool is not None:
                pool.shutdown(wait=True)

    segments = done + computed
    complete = bool(segments) and segments[-1].hi == config.x_max + 1
    summaries, tallies = fold(segments, config)
    output = SurveyOutput(config, summaries, tallies, [], ckpt, None,
                          len(computed), len(done), complete)
    if not complete:
        return output

    output.rows = [result_row(summaries[x], tallies[x], config) for x in config.checkpoints]
    if config.output_format == "csv":
        text = render_csv(output.rows, config.eps_grid)
        result_path = out_dir / "survey.csv"
    else:
        text = render_jsonl(output.rows, summaries, tallies, config.eps_grid)
        result_path = out_dir / "survey.jsonl"
    if config.cross_checks:
        output.crosscheck = cross_check(config, spf)
    try:
        result_path.write_text(text)
        if config.cross_checks:
            (out_dir / CROSSCHECK_NAME).write_text(
                json.dumps(output.crosscheck, sort_keys=True, indent=1) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write results to {out_dir}: {exc}") from exc
    output.result_path = result_path
    cc = output.crosscheck
    if cc and (cc["record_mismatches"] or cc["congruence_failures"]):
        raise IntegrityError(f"sampled cross-checks failed: {cc}")
    return output


def resume(config: SurveyConfig, checkpoint_file: Path | None = None) -> SurveyOutput:
    """Continue from an existing checkpoint, computing only missing segments."""
    return run_survey(config, resume=True, checkpoint_path=checkpoint_file)
