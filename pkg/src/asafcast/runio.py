"""Run artifacts: draw files, manifests, and the run directory layout.

Draws are persisted per chain in two synchronized forms: a long-format CSV
(iteration, parameter, value) for inspection, and a compact binary sidecar
of fixed-width little-endian records (u32 iteration, u32 parameter-id,
f64 value) whose parameter ids are defined by ``params.csv``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParseError
from .sampler import ChainConfig, DrawStore

_RECORD = struct.Struct("<IId")


def write_draws(out_dir: str | Path, store: DrawStore) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "params.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "name"])
        writer.writerows(enumerate(store.param_names))
    first_iter = store.config.warmup + 1
    for ci, draws in enumerate(store.chains):
        with open(out_dir / f"chain{ci}.csv", "w", newline="") as fh, open(
            out_dir / f"chain{ci}.bin", "wb"
        ) as bh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "parameter", "value"])
            for row_i, row in enumerate(draws):
                iteration = first_iter + row_i * store.config.thinning
                for pid, value in enumerate(row):
                    writer.writerow([iteration, store.param_names[pid], repr(float(value))])
                    bh.write(_RECORD.pack(iteration, pid, value))


def read_draws_binary(out_dir: str | Path, n_chains: int | None = None) -> tuple[list[str], list[np.ndarray]]:
    """Load the binary sidecars back into (param names, per-chain matrices)."""
    out_dir = Path(out_dir)
    names: list[str] = []
    with open(out_dir / "params.csv", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["id", "name"]:
            raise ParseError(f"{out_dir}/params.csv: expected columns id,name")
        for rec in reader:
            names.append(rec["name"])
    chains = []
    ci = 0
    while (out_dir / f"chain{ci}.bin").exists():
        raw = (out_dir / f"chain{ci}.bin").read_bytes()
        if len(raw) % _RECORD.size:
            raise ParseError(f"chain{ci}.bin: truncated record")
        n_records = len(raw) // _RECORD.size
        if n_records % len(names):
            raise ParseError(f"chain{ci}.bin: incomplete final iteration")
        values = np.frombuffer(
            raw, dtype=np.dtype([("it", "<u4"), ("pid", "<u4"), ("value", "<f8")])
        )
        chains.append(values["value"].reshape(-1, len(names)).copy())
        ci += 1
        if n_chains is not None and ci == n_chains:
            break
    if not chains:
        raise ParseError(f"no chain files in {out_dir}")
    return names, chains


# --- manifest ---------------------------------------------------------------


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_hash(payload: dict) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class RunManifest:
    """Provenance record emitted alongside every command's outputs."""

    command: str
    config: dict
    seed: int
    version: str = __version__
    input_digests: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash({"command": self.command, "config": self.config,
                            "seed": self.seed, "inputs": self.input_digests})

    def add_input(self, path: str | Path) -> None:
        self.input_digests[str(path)] = file_digest(path)

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - start, 3)

    def write(self, out_dir: str | Path) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "manifest.json"
        payload = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "config_hash": self.hash,
            "input_digests": self.input_digests,
            "timings": self.timings,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def store_from_files(out_dir: str | Path, config: ChainConfig, variant, meta: dict) -> DrawStore:
    """Rehydrate a DrawStore from persisted draws plus stored metadata."""
    names, chains = read_draws_binary(out_dir)
    return DrawStore(
        config=config,
        variant=variant,
        param_names=names,
        chains=chains,
        acceptance=[{} for _ in chains],
        country_names=meta["country_names"],
        sexes=meta["sexes"],
        t_end={k: int(v) for k, v in meta["t_end"].items()},
    )
