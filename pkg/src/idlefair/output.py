"""Persistence: trajectory files, report CSVs, and run manifests.

All emitters are deterministic functions of their inputs (stable key
order, shortest round-trip float formatting), so a re-run with the same
config and seed reproduces every output byte for byte.  Wall-clock
timing goes to a separate run log, never into the manifest.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import emit_config, parse_config_dict
from .simulation import KIND_NAMES, SystemConfig, Trajectory

_TRAJ_MAGIC = b"IFTR"
_TRAJ_VERSION = 1

CSV_SCHEMA_COMMENTS = {
    "trajectory": "# idlefair trajectory csv schema=1",
    "fairness": "# idlefair fairness csv schema=1",
    "scaling": "# idlefair scaling report csv schema=1",
    "ks": "# idlefair ks table csv schema=1",
    "terminals": "# idlefair terminal samples csv schema=1",
}


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def config_digest(obj) -> str:
    return sha256_bytes(canonical_json(emit_config(obj)).encode())


# -- trajectory files --------------------------------------------------------

def write_trajectory_csv(traj: Trajectory, path) -> None:
    lines = [CSV_SCHEMA_COMMENTS["trajectory"], "time,kind,server,headcount"]
    for t, kind, server, head in zip(
        traj.times.tolist(), traj.kinds.tolist(), traj.servers.tolist(), traj.heads.tolist()
    ):
        lines.append(f"{_fmt(t)},{KIND_NAMES[kind]},{server},{head}")
    Path(path).write_text("\n".join(lines) + "\n")


_ARRAY_FIELDS = (
    ("times", "<f8"),
    ("kinds", "<i1"),
    ("servers", "<i4"),
    ("heads", "<i8"),
    ("idles", "<i8"),
    ("ep_server", "<i4"),
    ("ep_start", "<f8"),
    ("ep_end", "<f8"),
    ("ep_open", "<u1"),
    ("ep_initial", "<u1"),
    ("rates", "<f8"),
)

_COUNT_FIELDS = (
    "arrivals", "completions", "abandonments", "potential_noops", "routings", "final_head",
)


def write_trajectory_binary(traj: Trajectory, path) -> None:
    """Compact self-contained snapshot: versioned header with the full
    config, then raw little-endian arrays."""
    header = {
        "config": emit_config(traj.config),
        "lengths": {name: int(getattr(traj, name).size) for name, _ in _ARRAY_FIELDS},
        "counts": {name: int(getattr(traj, name)) for name in _COUNT_FIELDS},
    }
    blob = canonical_json(header).encode()
    out = bytearray()
    out += _TRAJ_MAGIC
    out += struct.pack("<II", _TRAJ_VERSION, len(blob))
    out += blob
    for name, dtype in _ARRAY_FIELDS:
        out += np.ascontiguousarray(getattr(traj, name), dtype=dtype).tobytes()
    Path(path).write_bytes(bytes(out))


def read_trajectory_binary(path) -> Trajectory:
    data = Path(path).read_bytes()
    if data[:4] != _TRAJ_MAGIC:
        raise ValueError(f"{path}: not an idlefair trajectory file")
    version, blob_len = struct.unpack("<II", data[4:12])
    if version != _TRAJ_VERSION:
        raise ValueError(f"{path}: unsupported trajectory version {version}")
    header = json.loads(data[12 : 12 + blob_len].decode())
    config = parse_config_dict(header["config"])
    if not isinstance(config, SystemConfig):
        raise ValueError(f"{path}: trajectory header does not hold a system config")
    offset = 12 + blob_len
    arrays = {}
    for name, dtype in _ARRAY_FIELDS:
        size = header["lengths"][name]
        dt = np.dtype(dtype)
        arrays[name] = np.frombuffer(data, dtype=dt, count=size, offset=offset).copy()
        offset += size * dt.itemsize
    arrays["ep_open"] = arrays["ep_open"].astype(bool)
    arrays["ep_initial"] = arrays["ep_initial"].astype(bool)
    counts = header["counts"]
    return Trajectory(config=config, **arrays, **counts, audit=None)


# -- report CSVs -------------------------------------------------------------

def write_fairness_csv(path, fairness_path) -> None:
    """(t, atom_location, weight) rows grouped by time."""
    lines = [CSV_SCHEMA_COMMENTS["fairness"], "t,atom_location,weight"]
    for t, m in zip(fairness_path.grid.tolist(), fairness_path.measures):
        for loc, w in m.as_pairs():
            lines.append(f"{_fmt(float(t))},{_fmt(loc)},{_fmt(w)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_scaling_report_csv(rows: list[dict], path) -> None:
    """(n, statistic, median, q25, q75, reps) long-form table."""
    lines = [CSV_SCHEMA_COMMENTS["scaling"], "n,statistic,median,q25,q75,reps"]
    for row in rows:
        for stat in ("sup_ihat", "sup_ibar", "idle_effort"):
            lines.append(
                f"{row['n']},{stat},{_fmt(row[f'{stat}_median'])},"
                f"{_fmt(row[f'{stat}_q25'])},{_fmt(row[f'{stat}_q75'])},{row['reps']}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_ks_table_csv(rows: list[dict], path) -> None:
    lines = [CSV_SCHEMA_COMMENTS["ks"], "label,statistic,n1,n2"]
    for row in rows:
        lines.append(f"{row['label']},{_fmt(row['statistic'])},{row['n1']},{row['n2']}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_terminal_samples_csv(path, columns: dict[str, list]) -> None:
    """Aligned per-replication sample columns (rep index first)."""
    names = list(columns)
    length = len(next(iter(columns.values())))
    lines = [CSV_SCHEMA_COMMENTS["terminals"], "rep," + ",".join(names)]
    for i in range(length):
        lines.append(str(i) + "," + ",".join(_fmt(columns[name][i]) for name in names))
    Path(path).write_text("\n".join(lines) + "\n")


# -- run manifest ------------------------------------------------------------

@dataclass
class RunManifest:
    """Reproducibility record of one CLI run.

    The serialized manifest contains only deterministic content; start
    and end wall times live on the object and go to the run log file.
    """

    config: dict
    config_digest: str
    base_seed: dict
    tool_version: str = __version__
    outputs: dict = field(default_factory=dict)
    summary_metrics: dict = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""

    @staticmethod
    def for_config(obj) -> "RunManifest":
        cfg = emit_config(obj)
        seed_keys = ("seed", "stream_id")
        return RunManifest(
            config=cfg,
            config_digest=config_digest(obj),
            base_seed={k: cfg[k] for k in seed_keys},
        )

    def add_output(self, path) -> None:
        path = Path(path)
        self.outputs[path.name] = sha256_file(path)

    def deterministic_dict(self) -> dict:
        return {
            "config": self.config,
            "config_digest": self.config_digest,
            "base_seed": self.base_seed,
            "tool_version": self.tool_version,
            "outputs": dict(sorted(self.outputs.items())),
            "summary_metrics": dict(sorted(self.summary_metrics.items())),
        }

    def save(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(canonical_json(self.deterministic_dict()))
        (out_dir / "run_log.json").write_text(
            canonical_json({"started_at": self.started_at, "finished_at": self.finished_at})
        )
        return manifest_path


def load_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
