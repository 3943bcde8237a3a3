"""Phase-library file formats and the run artifact set."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Literal, Mapping

import numpy as np

from .errors import InputError
from .model import DEFAULT_SAMPLE_PERIOD, VARIABLE_KEYS, ActionPhase, PhaseLibrary, RaggedPhase, validate_library

CSV_HEADER = ("phase_id", "t", *VARIABLE_KEYS)
DSI_HEADER = ("phase_id", "cluster", "variable", "dsi", "epsilon", "triggered")
LibraryFormat = Literal["csv-long", "jsonl"]


def _fmt(x: float) -> str:
    # repr is the shortest string that round-trips a float exactly
    return repr(float(x))


def infer_format(path: str | Path) -> LibraryFormat:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv-long"
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "jsonl"
    raise InputError(f"{path}: cannot infer library format from suffix {suffix!r}; pass csv-long or jsonl")


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 text ({exc})") from exc


def _number(raw: str, where: str, name: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"{where}: {name} is not a number: {raw!r}") from None


def _parse_csv(text: str, path: Path, sample_period: float) -> list[ActionPhase]:
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None:
        raise InputError(f"{path}: file is empty")
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise InputError(f"{path}:1: header must be exactly {','.join(CSV_HEADER)}, got {','.join(header)}")
    blocks: dict[str, list[list[float]]] = {}
    order: list[str] = []
    current = None
    for row in reader:
        line = reader.line_num
        where = f"{path}:{line}"
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            raise InputError(f"{where}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        pid = row[0].strip()
        if not pid:
            raise InputError(f"{where}: empty phase_id")
        try:
            t = int(row[1])
        except ValueError:
            raise InputError(f"{where}: t is not an integer: {row[1]!r}") from None
        if pid != current:
            if pid in blocks:
                raise InputError(f"{where}: rows of phase {pid} are not contiguous in the file")
            blocks[pid] = [[] for _ in VARIABLE_KEYS]
            order.append(pid)
            current = pid
        expected = len(blocks[pid][0])
        if t != expected:
            raise InputError(f"{where}: phase {pid} has t={t} where t={expected} was expected (t must run 0..T-1)")
        for k, name in enumerate(VARIABLE_KEYS):
            blocks[pid][k].append(_number(row[2 + k], where, name))
    if not order:
        raise InputError(f"{path}: no data rows")
    return [ActionPhase(pid, blocks[pid], sample_period=sample_period) for pid in order]


def _parse_jsonl(text: str, path: Path, sample_period: float) -> list[ActionPhase | RaggedPhase]:
    phases: list[ActionPhase | RaggedPhase] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{path}:{line_no}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(f"{where}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise InputError(f"{where}: expected one JSON object per line")
        missing = [k for k in ("id", *VARIABLE_KEYS) if k not in obj]
        if missing:
            raise InputError(f"{where}: missing key(s) {', '.join(missing)}")
        channels = []
        for name in VARIABLE_KEYS:
            values = obj[name]
            if not isinstance(values, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in values):
                raise InputError(f"{where}: {name} must be an array of numbers")
            channels.append(values)
        period = obj.get("sample_period", sample_period)
        if not isinstance(period, (int, float)) or isinstance(period, bool):
            raise InputError(f"{where}: sample_period must be a number")
        try:
            phase = ActionPhase.from_ragged(str(obj["id"]), channels, sample_period=float(period), labels=obj.get("labels"))
        except ValueError as exc:
            raise InputError(f"{where}: {exc}") from None
        phases.append(phase)
    if not phases:
        raise InputError(f"{path}: file is empty")
    return phases


def read_library(
    path: str | Path,
    fmt: LibraryFormat | None = None,
    sample_period: float = DEFAULT_SAMPLE_PERIOD,
    source_tag: str | None = None,
) -> PhaseLibrary:
    """Read and validate a library; phases keep their file order.

    CSV rows carry no sample period, so ``sample_period`` applies to every
    phase; in JSONL it is the fallback for objects without one.
    """
    path = Path(path)
    fmt = fmt or infer_format(path)
    text = _read_text(path)
    if not text.strip():
        raise InputError(f"{path}: file is empty")
    if fmt == "csv-long":
        phases = _parse_csv(text, path, sample_period)
    elif fmt == "jsonl":
        phases = _parse_jsonl(text, path, sample_period)
    else:
        raise InputError(f"unknown library format {fmt!r}")
    lib = PhaseLibrary(tuple(phases), source_tag if source_tag is not None else path.name)
    report = validate_library(lib)
    if not report.ok:
        raise InputError(f"{path}: invalid library\n{report}")
    return lib


def write_library_csv(lib: PhaseLibrary, path: str | Path) -> Path:
    path = Path(path)
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for phase in lib.phases:
            for t in range(phase.length):
                w.writerow([phase.id, t, *(_fmt(x) for x in phase.series[:, t])])
    return path


def write_library_jsonl(lib: PhaseLibrary, path: str | Path) -> Path:
    path = Path(path)
    with _open_out(path) as fh:
        for phase in lib.phases:
            obj: dict[str, Any] = {"id": phase.id, "sample_period": phase.sample_period}
            for k, name in enumerate(VARIABLE_KEYS):
                obj[name] = phase.series[k].tolist()
            if phase.labels is not None:
                obj["labels"] = [x.value for x in phase.labels]
            fh.write(json.dumps(obj) + "\n")
    return path


def write_library(lib: PhaseLibrary, path: str | Path, fmt: LibraryFormat | None = None) -> Path:
    fmt = fmt or infer_format(path)
    return write_library_csv(lib, path) if fmt == "csv-long" else write_library_jsonl(lib, path)


def write_truth(truth: Mapping[str, Any], path: str | Path) -> Path:
    """Ground-truth map of a synthetic library: ``phase_id,motion,state``."""
    path = Path(path)
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("phase_id", "motion", "state"))
        for pid, spec in truth.items():
            w.writerow((pid, spec.motion.value, spec.state.value))
    return path


def read_truth(path: str | Path) -> dict[str, tuple[str, str]]:
    path = Path(path)
    rows = list(csv.DictReader(io.StringIO(_read_text(path), newline="")))
    return {r["phase_id"]: (r["motion"], r["state"]) for r in rows}


# ---------------------------------------------------------------- JSON output


def to_jsonable(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings ``Infinity``, ``-Infinity``, ``NaN``."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return x
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, full float precision."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj: Any, path: str | Path) -> Path:
    path = Path(path)
    with _open_out(path) as fh:
        fh.write(dumps(obj))
    return path


def _open_out(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------- run artifacts


def write_assignments(report, path: str | Path) -> Path:
    """One row per input phase: final pattern (or ``unresolved``) and its fate in every round."""
    path = Path(path)
    labels = {p.pattern_id: p.label for p in report.patterns}
    final = report.pattern_of()
    ids: list[str] = []
    seen = set()
    for rnd in report.rounds:
        for pid in rnd.clustering.assignment:
            if pid not in seen:
                seen.add(pid)
                ids.append(pid)
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("phase_id", "pattern_id", "motion", "state", *(f"round{r.index}" for r in report.rounds)))
        for pid in ids:
            pattern = final.get(pid, "unresolved")
            lab = labels.get(pattern)
            fates = []
            for rnd in report.rounds:
                if pid not in rnd.clustering.assignment:
                    fates.append("")
                elif pid in set(rnd.re_extracted):
                    fates.append("re-extracted")
                else:
                    fates.append(str(rnd.clustering.assignment[pid]))
            w.writerow((pid, pattern, lab.motion.value if lab else "", lab.state.value if lab else "", *fates))
    return path


def read_assignments(path: str | Path) -> dict[str, str]:
    """``phase_id -> pattern_id`` from an assignments file (unresolved phases omitted)."""
    path = Path(path)
    reader = csv.DictReader(io.StringIO(_read_text(path), newline=""))
    if reader.fieldnames is None or not {"phase_id", "pattern_id"} <= set(reader.fieldnames):
        raise InputError(f"{path}: needs phase_id and pattern_id columns")
    return {r["phase_id"]: r["pattern_id"] for r in reader if r["pattern_id"] and r["pattern_id"] != "unresolved"}


def write_dsi(record, path: str | Path) -> Path:
    """Per-phase, per-variable dSI of one round; header only when the round skipped the audit."""
    path = Path(path)
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DSI_HEADER)
        if record.epsilon is not None:
            assignment = record.clustering.assignment
            for rec in record.records:
                for k, name in enumerate(VARIABLE_KEYS):
                    triggered = any(int(v) == k for v in rec.triggering_set)
                    w.writerow((rec.phase_id, assignment[rec.phase_id], name, _fmt(rec.dsi[k]), _fmt(record.epsilon[k]), int(triggered)))
    return path


def read_dsi(path: str | Path) -> list[tuple[str, str, float, float, bool]]:
    """Rows ``(phase_id, variable, dsi, epsilon, triggered)``; ``triggered`` is recomputed as dsi > epsilon."""
    path = Path(path)
    reader = csv.reader(io.StringIO(_read_text(path), newline=""))
    header = next(reader, None)
    if header is None:
        raise InputError(f"{path}: file is empty")
    cols = {h.strip(): i for i, h in enumerate(header)}
    need = ("phase_id", "variable", "dsi", "epsilon")
    if any(c not in cols for c in need):
        raise InputError(f"{path}:1: dSI table needs columns {', '.join(need)}")
    rows = []
    for row in reader:
        if not row:
            continue
        where = f"{path}:{reader.line_num}"
        var = row[cols["variable"]].strip()
        if var not in VARIABLE_KEYS:
            raise InputError(f"{where}: unknown variable {var!r}")
        dsi = _number(row[cols["dsi"]], where, "dsi")
        eps = _number(row[cols["epsilon"]], where, "epsilon")
        if dsi < 0:
            raise InputError(f"{where}: dSI must be non-negative, got {dsi}")
        rows.append((row[cols["phase_id"]], var, dsi, eps, dsi > eps))
    return rows


def importance_payload(record) -> dict:
    return {
        "round": record.index,
        "dsi_evaluated": record.dsi_evaluated,
        "ballots": record.ballots.to_dict(),
        "importance": None if record.importance is None else record.importance.to_dict(),
        "importance_defined": record.importance is not None,
    }


def write_report(report, directory: str | Path) -> list[Path]:
    """Write the full artifact set of a run and return the written paths in order.

    ``report.json`` and ``assignments.csv`` once, then for each round
    ``dendrogram_round<k>.json``, ``dsi_round<k>.csv`` and ``importance_round<k>.json``.
    """
    out = Path(directory)
    written = [write_json(report.to_dict(), out / "report.json"), write_assignments(report, out / "assignments.csv")]
    for rnd in report.rounds:
        written.append(write_json(rnd.dendrogram.to_dict(), out / f"dendrogram_round{rnd.index}.json"))
        written.append(write_dsi(rnd, out / f"dsi_round{rnd.index}.csv"))
        written.append(write_json(importance_payload(rnd), out / f"importance_round{rnd.index}.json"))
    return written


def load_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None

