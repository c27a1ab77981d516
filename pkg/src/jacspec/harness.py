"""Experiment configs, sweep execution, and CSV/manifest persistence.

Determinism contract: every random draw in a task comes from a stream whose
id is a stable hash of (role, n, L, seed-label, layer), seeded by the master
seed. Tasks therefore commute: any worker count and any scheduling produce
the same rows, which are sorted on a fixed key before emission. The
wall_time_ms column is pinned to 0 for the same reason; real timings live in
the manifest, which is the only re-run-variable output.

Stream roles: ("w_in", n, L, seed), ("w", n, L, seed, layer),
("x", d, n, L, seed), ("mask", n, L, seed, layer). The labels deliberately
exclude experiment kind and sigma_w2, so equal (n, L, seed) grid points are
coupled across sweeps: a correlation sweep at eta = 0 emits rows equal to a
depth sweep at sigma_w2 = 2, and pruned runs share base weights with their
unpruned baseline.

Restarts: completed rows are appended to <out>.partial as they finish; a
rerun with the same config and master seed skips them and still emits the
identical final CSV.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels, matrixio, pruning
from .diagnostics import activation_weight_stats, bernoulli_fraction, chi2_independence, cross_tabulate, ks_uniformity, pearson_corr
from .errors import ConfigError, JacspecError
from .network import MlpConfig, NetworkWeights, forward, jacobian_log_norm, sample_weights, synthetic_input
from .randomness import EnsembleSpec, correlated_ensemble, derive_stream, iid_ensemble, sample_gaussians

CSV_HEADER = (
    "experiment_id,kind,seed,n,L,sigma_w2,method,sparsity,scaling_mode,"
    "scale_value,eta,k,log_jac_norm,converged,wall_time_ms"
)
APPROX_CSV_HEADER = "experiment_id,kind,replicate,n,L,layer,statistic,value"

KINDS = ("depth_sweep", "prune_sweep", "corr_sweep", "approx_verify", "condition_check")
_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")

NEG_INF = float("-inf")


# --- configuration -------------------------------------------------------------

@dataclass(frozen=True)
class PruningEntry:
    method: str  # "random" | "magnitude_threshold" | "magnitude_top_r"
    scaling: str = "none"
    s: float | None = None
    t: float | None = None
    r: int | None = None

    def __post_init__(self):
        if self.method not in {"random", "magnitude_threshold", "magnitude_top_r"}:
            raise ConfigError(f"unknown pruning method {self.method!r}")
        if self.scaling not in pruning.SCALING_MODES:
            raise ConfigError(f"unknown scaling mode {self.scaling!r}")
        given = [p for p, v in (("s", self.s), ("t", self.t), ("r", self.r)) if v is not None]
        needed = {"random": "s", "magnitude_threshold": "t", "magnitude_top_r": "r"}[self.method]
        if given != [needed]:
            raise ConfigError(f"method {self.method!r} takes exactly parameter {needed!r}, got {given or 'none'}")

    @property
    def target_sparsity(self) -> float | None:
        return self.s


_CONFIG_KEYS = {
    "experiment_id", "kind", "n", "d", "depths", "seeds", "sigma_w2", "eta", "input",
    "pruning", "threads", "out_path", "k", "layer", "replicates", "members",
    "pair_seeds", "mc_samples", "normalize",
}
_PRUNING_KEYS = {"method", "scaling", "s", "t", "r", "retention"}


@dataclass
class ExperimentConfig:
    experiment_id: str
    kind: str
    n: int
    depths: list
    seeds: int
    sigma_w2: list = field(default_factory=lambda: [2.0])
    eta: list | None = None
    input: str = "synthetic"
    d: int | None = None
    pruning: list = field(default_factory=list)
    threads: int = 1
    out_path: str | None = None
    k: int = 1
    layer: int = 10          # approx_verify: indicator layer under test
    replicates: int = 200    # approx_verify: number of chi-squared tables
    members: int = 200       # approx_verify: traces cross-tabulated per table
    pair_seeds: int = 1000   # approx_verify: (T_W, T_D) sample count
    mc_samples: int = 100    # condition_check
    normalize: bool = False  # corr_sweep: divide layers by sqrt(1 + eta^2)

    def __post_init__(self):
        if not _ID_RE.match(self.experiment_id or ""):
            raise ConfigError(f"experiment_id must match [A-Za-z0-9._-]+, got {self.experiment_id!r}")
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if isinstance(self.sigma_w2, (int, float)):
            self.sigma_w2 = [float(self.sigma_w2)]
        self.sigma_w2 = [float(v) for v in self.sigma_w2]
        if any(v <= 0 for v in self.sigma_w2):
            raise ConfigError("sigma_w2 values must be > 0")
        self.depths = [int(L) for L in self.depths]
        if not self.depths or any(L < 1 for L in self.depths):
            raise ConfigError("depths must be a non-empty list of integers >= 1")
        if self.seeds < 0:
            raise ConfigError(f"seeds must be >= 0, got {self.seeds}")
        if self.eta is not None:
            self.eta = [float(v) for v in self.eta]
            if any(v < 0 for v in self.eta):
                raise ConfigError("eta values must be >= 0")
        if self.d is None:
            self.d = self.n
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.k < 1 or self.k > min(self.depths):
            raise ConfigError(f"k must be in 1..min(depths), got {self.k}")
        if self.kind == "corr_sweep" and not self.eta:
            raise ConfigError("corr_sweep needs a non-empty eta array")
        if self.kind == "prune_sweep" and not self.pruning:
            raise ConfigError("prune_sweep needs at least one [[pruning]] entry")
        if self.kind == "depth_sweep" and self.seeds < 1:
            raise ConfigError("depth_sweep needs seeds >= 1")
        if self.layer < 1:
            raise ConfigError(f"layer must be >= 1, got {self.layer}")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def canonical_dict(self) -> dict:
        out = {
            "experiment_id": self.experiment_id,
            "kind": self.kind,
            "n": self.n,
            "d": self.d,
            "depths": self.depths,
            "seeds": self.seeds,
            "sigma_w2": self.sigma_w2,
            "input": self.input,
            "k": self.k,
        }
        if self.eta is not None:
            out["eta"] = self.eta
        if self.kind == "corr_sweep":
            out["normalize"] = self.normalize
        if self.pruning:
            out["pruning"] = [
                {k: v for k, v in (("method", e.method), ("scaling", e.scaling), ("s", e.s), ("t", e.t), ("r", e.r)) if v is not None}
                for e in self.pruning
            ]
        if self.kind == "approx_verify":
            out.update(layer=self.layer, replicates=self.replicates, members=self.members, pair_seeds=self.pair_seeds)
        if self.kind == "condition_check":
            out["mc_samples"] = self.mc_samples
        return out


def _pruning_entry_from_dict(raw: dict, n: int) -> PruningEntry:
    unknown = set(raw) - _PRUNING_KEYS
    if unknown:
        raise ConfigError(f"unknown [[pruning]] keys: {sorted(unknown)}")
    r = raw.get("r")
    retention = raw.get("retention")
    if retention is not None:
        if r is not None:
            raise ConfigError("give r or retention, not both")
        if not 0.0 < retention <= 1.0:
            raise ConfigError(f"retention must be in (0, 1], got {retention}")
        r = max(1, min(n * n, round(retention * n * n)))
    return PruningEntry(
        method=raw.get("method", ""),
        scaling=raw.get("scaling", "none"),
        s=raw.get("s"),
        t=raw.get("t"),
        r=r,
    )


def config_from_dict(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for required in ("experiment_id", "kind", "n", "depths"):
        if required not in raw:
            raise ConfigError(f"config is missing required key {required!r}")
    raw = dict(raw)
    n = int(raw["n"])
    entries = [_pruning_entry_from_dict(e, n) for e in raw.pop("pruning", [])]
    try:
        return ExperimentConfig(pruning=entries, seeds=int(raw.pop("seeds", 0)), **raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


# --- rows ----------------------------------------------------------------------

@dataclass
class SweepRow:
    experiment_id: str
    kind: str
    seed: int
    n: int
    L: int
    sigma_w2: float
    method: str
    sparsity: float | None
    scaling_mode: str
    scale_value: float | None
    eta: float | None
    k: int
    log_jac_norm: float
    converged: bool
    wall_time_ms: int = 0  # pinned; see module docstring


def _fmt_opt_float(v) -> str:
    return "" if v is None else repr(float(v))


def format_row(r: SweepRow) -> str:
    log_txt = "neg_inf" if r.log_jac_norm == NEG_INF else repr(float(r.log_jac_norm))
    return ",".join(
        [
            r.experiment_id,
            r.kind,
            str(r.seed),
            str(r.n),
            str(r.L),
            repr(float(r.sigma_w2)),
            r.method,
            _fmt_opt_float(r.sparsity),
            r.scaling_mode,
            _fmt_opt_float(r.scale_value),
            _fmt_opt_float(r.eta),
            str(r.k),
            log_txt,
            "true" if r.converged else "false",
            str(r.wall_time_ms),
        ]
    )


def parse_row(line: str) -> SweepRow:
    parts = line.rstrip("\n").split(",")
    if len(parts) != 15:
        raise ConfigError(f"expected 15 CSV fields, got {len(parts)}: {line!r}")
    def opt(v):
        return None if v == "" else float(v)
    return SweepRow(
        experiment_id=parts[0],
        kind=parts[1],
        seed=int(parts[2]),
        n=int(parts[3]),
        L=int(parts[4]),
        sigma_w2=float(parts[5]),
        method=parts[6],
        sparsity=opt(parts[7]),
        scaling_mode=parts[8],
        scale_value=opt(parts[9]),
        eta=opt(parts[10]),
        k=int(parts[11]),
        log_jac_norm=NEG_INF if parts[12] == "neg_inf" else float(parts[12]),
        converged=parts[13] == "true",
        wall_time_ms=int(parts[14]),
    )


def parse_csv(text: str) -> list:
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        got = lines[0] if lines else "<empty>"
        raise ConfigError(f"bad CSV header: expected {CSV_HEADER!r}, got {got!r}")
    return [parse_row(ln) for ln in lines[1:] if ln]


def _sort_key(r: SweepRow):
    return (
        r.sigma_w2,
        r.method,
        -1.0 if r.sparsity is None else r.sparsity,
        r.scaling_mode,
        -1.0 if r.eta is None else r.eta,
        r.L,
        r.seed,
        r.k,
    )


# --- task plumbing ---------------------------------------------------------------

def resolve_threads(config: ExperimentConfig, cli_threads: int | None) -> int:
    env = os.environ.get("JACSPEC_THREADS")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ConfigError(f"JACSPEC_THREADS must be an integer, got {env!r}") from None
        if value < 1:
            raise ConfigError(f"JACSPEC_THREADS must be >= 1, got {value}")
        return value
    if cli_threads is not None:
        if cli_threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {cli_threads}")
        return cli_threads
    return config.threads


def _config_digest(config: ExperimentConfig, master_seed: int) -> str:
    payload = json.dumps({"config": config.canonical_dict(), "master_seed": master_seed}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def _stream_factory(master_seed: int, n: int, L: int, seed) :
    def factory(role: str, layer: int):
        if role == "w_in":
            return derive_stream(master_seed, "w_in", n, L, seed)
        return derive_stream(master_seed, "w", n, L, seed, layer)
    return factory


def _input_vector(config: ExperimentConfig, master_seed: int, L: int, seed) -> np.ndarray:
    if config.input == "synthetic":
        return synthetic_input(derive_stream(master_seed, "x", config.d, config.n, L, seed), config.d)
    return matrixio.load_input_vector(config.input, config.d)


def _build_masks(config: ExperimentConfig, entry: PruningEntry, weights: NetworkWeights,
                 master_seed: int, L: int, seed):
    masks = []
    for layer in range(1, L + 1):
        w = weights.hidden[layer - 1]
        if entry.method == "random":
            stream = derive_stream(master_seed, "mask", config.n, L, seed, layer)
            mask = pruning.random_mask(stream, config.n, entry.s, entry.scaling, weights=w)
        elif entry.method == "magnitude_threshold":
            mask = pruning.magnitude_mask_threshold(w, config.n, entry.t, entry.scaling)
        else:
            mask = pruning.magnitude_mask_top_r(w, config.n, entry.r, entry.scaling)
        masks.append(mask)
    return masks


def _entry_sparsity_column(config: ExperimentConfig, entry: PruningEntry) -> float:
    """Configured target sparsity: the stable group key for rows and curves."""
    if entry.method == "random":
        return entry.s
    if entry.method == "magnitude_top_r":
        return 1.0 - entry.r / (config.n * config.n)
    return 1.0 - pruning.expected_kept_fraction(entry.t, config.n)


# --- sweep runners ---------------------------------------------------------------

class _Emitter:
    """Collects finished rows, mirrors them to a .partial file for restarts."""

    def __init__(self, out_path, digest):
        self.lock = threading.Lock()
        self.done = {}
        self.partial_path = None
        self._fh = None
        if out_path is not None:
            self.partial_path = str(out_path) + ".partial"
            if os.path.exists(self.partial_path):
                self._load_existing(digest)
            self._fh = open(self.partial_path, "a", newline="\n")
            if os.path.getsize(self.partial_path) == 0:
                self._fh.write(f"# jacspec-partial {digest}\n")
                self._fh.flush()

    def _load_existing(self, digest):
        with open(self.partial_path) as fh:
            first = fh.readline().strip()
            if first != f"# jacspec-partial {digest}":
                # different config or seed: start over
                os.remove(self.partial_path)
                return
            for line in fh:
                if "\t" not in line:
                    continue
                idx, row_text = line.rstrip("\n").split("\t", 1)
                try:
                    self.done[int(idx)] = parse_row(row_text)
                except (ValueError, ConfigError):
                    continue  # torn write from an interrupted run

    def emit(self, idx: int, row: SweepRow):
        with self.lock:
            self.done[idx] = row
            if self._fh is not None:
                self._fh.write(f"{idx}\t{format_row(row)}\n")
                self._fh.flush()

    def close_and_cleanup(self):
        if self._fh is not None:
            self._fh.close()
            os.remove(self.partial_path)


def _atomic_write(path, text: str):
    tmp = str(path) + ".tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_outputs(out_path, rows, config, master_seed, digest, threads, t_start, extra=None):
    body = CSV_HEADER + "\n" + "".join(format_row(r) + "\n" for r in rows)
    manifest = {
        "format": "jacspec-manifest-v1",
        "experiment_id": config.experiment_id,
        "kind": config.kind,
        "master_seed": master_seed,
        "config": config.canonical_dict(),
        "config_digest": digest,
        "package_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "generator": "pcg64+box-muller",
        "rows": len(rows),
        "csv_sha256": hashlib.sha256(body.encode()).hexdigest(),
        "threads_used": threads,
        "wall_ms_total": int(1000 * (time.perf_counter() - t_start)),
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    if out_path is not None:
        _atomic_write(out_path, body)
        _atomic_write(str(out_path) + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return body, manifest


@dataclass
class SweepResult:
    rows: list
    csv_body: str
    manifest: dict
    csv_path: str | None


def _run_grid(config, master_seed, grid, worker, threads=None, out_path=None, max_tasks=None, quiet=True):
    """Shared engine: compute worker(point) for every grid point, restartably."""
    threads = resolve_threads(config, threads)
    digest = _config_digest(config, master_seed)
    t_start = time.perf_counter()
    emitter = _Emitter(out_path, digest)
    pending = [(idx, pt) for idx, pt in enumerate(grid) if idx not in emitter.done]
    if max_tasks is not None:
        pending = pending[:max_tasks]
    if not quiet:
        print(f"[{config.experiment_id}] {len(pending)} of {len(grid)} tasks to run "
              f"on {threads} thread(s), backend={kernels.BACKEND}", file=sys.stderr)
    if threads == 1 or len(pending) <= 1:
        for idx, pt in pending:
            emitter.emit(idx, worker(pt))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(worker, pt): idx for idx, pt in pending}
            for fut in as_completed(futures):
                emitter.emit(futures[fut], fut.result())
    if max_tasks is not None and len(emitter.done) < len(grid):
        # deliberate partial run: keep the .partial file for the resume
        if emitter._fh is not None:
            emitter._fh.close()
        rows = [emitter.done[i] for i in sorted(emitter.done)]
        return SweepResult(rows=rows, csv_body="", manifest={}, csv_path=None)
    rows = sorted(emitter.done.values(), key=_sort_key)
    body, manifest = _write_outputs(out_path, rows, config, master_seed, digest, threads, t_start)
    emitter.close_and_cleanup()
    return SweepResult(rows=rows, csv_body=body, manifest=manifest, csv_path=None if out_path is None else str(out_path))


def run_depth_sweep(config: ExperimentConfig, master_seed: int = 0, threads=None,
                    out_path=None, max_tasks=None, quiet=True) -> SweepResult:
    if config.kind != "depth_sweep":
        raise ConfigError(f"run_depth_sweep got kind {config.kind!r}")
    grid = [(s2, L, seed) for s2 in config.sigma_w2 for L in config.depths for seed in range(config.seeds)]

    def worker(pt):
        s2, L, seed = pt
        mlp = MlpConfig(d=config.d, n=config.n, L=L)
        weights = sample_weights(mlp, iid_ensemble(s2), _stream_factory(master_seed, config.n, L, seed))
        trace = forward(weights, _input_vector(config, master_seed, L, seed))
        log_norm, est = jacobian_log_norm(weights, trace, k=config.k)
        return SweepRow(
            experiment_id=config.experiment_id, kind=config.kind, seed=seed, n=config.n, L=L,
            sigma_w2=s2, method="none", sparsity=None, scaling_mode="none", scale_value=None,
            eta=None, k=config.k, log_jac_norm=log_norm, converged=est.converged,
        )

    return _run_grid(config, master_seed, grid, worker, threads, out_path, max_tasks, quiet)


def run_pruning_sweep(config: ExperimentConfig, master_seed: int = 0, threads=None,
                      out_path=None, max_tasks=None, quiet=True) -> SweepResult:
    if config.kind != "prune_sweep":
        raise ConfigError(f"run_pruning_sweep got kind {config.kind!r}")
    s2 = config.sigma_w2[0]
    grid = [(e, L, seed) for e in config.pruning for L in config.depths for seed in range(config.seeds)]

    def worker(pt):
        entry, L, seed = pt
        mlp = MlpConfig(d=config.d, n=config.n, L=L)
        weights = sample_weights(mlp, iid_ensemble(s2), _stream_factory(master_seed, config.n, L, seed))
        masks = _build_masks(config, entry, weights, master_seed, L, seed)
        weights.masks = [m.matrix for m in masks]
        trace = forward(weights, _input_vector(config, master_seed, L, seed))
        log_norm, est = jacobian_log_norm(weights, trace, k=config.k)
        return SweepRow(
            experiment_id=config.experiment_id, kind=config.kind, seed=seed, n=config.n, L=L,
            sigma_w2=s2, method=entry.method, sparsity=_entry_sparsity_column(config, entry),
            scaling_mode=entry.scaling, scale_value=sum(m.scale for m in masks) / len(masks),
            eta=None, k=config.k, log_jac_norm=log_norm, converged=est.converged,
        )

    return _run_grid(config, master_seed, grid, worker, threads, out_path, max_tasks, quiet)


def run_correlation_sweep(config: ExperimentConfig, master_seed: int = 0, threads=None,
                          out_path=None, max_tasks=None, quiet=True) -> SweepResult:
    if config.kind != "corr_sweep":
        raise ConfigError(f"run_correlation_sweep got kind {config.kind!r}")
    grid = [(eta, L, seed) for eta in config.eta for L in config.depths for seed in range(config.seeds)]

    def worker(pt):
        eta, L, seed = pt
        mlp = MlpConfig(d=config.d, n=config.n, L=L)
        ens = correlated_ensemble(eta, normalize=config.normalize)
        weights = sample_weights(mlp, ens, _stream_factory(master_seed, config.n, L, seed))
        trace = forward(weights, _input_vector(config, master_seed, L, seed))
        log_norm, est = jacobian_log_norm(weights, trace, k=config.k)
        return SweepRow(
            experiment_id=config.experiment_id, kind=config.kind, seed=seed, n=config.n, L=L,
            sigma_w2=2.0, method="none", sparsity=None, scaling_mode="none", scale_value=None,
            eta=eta, k=config.k, log_jac_norm=log_norm, converged=est.converged,
        )

    return _run_grid(config, master_seed, grid, worker, threads, out_path, max_tasks, quiet)


# --- approximation verification ---------------------------------------------------

@dataclass
class ApproxReport:
    pooled_fraction: float | None
    bernoulli_traces: int
    ks_stat: float | None
    ks_critical_1pct: float | None
    chi2_replicates: int
    corr_t_w_t_d: float | None
    pair_count: int
    rows: list  # (replicate_label, statistic, value)

    def summary_lines(self):
        out = []
        if self.pooled_fraction is not None:
            out.append(f"pooled activation fraction over {self.bernoulli_traces} traces: {self.pooled_fraction:.5f}")
        if self.ks_stat is not None:
            out.append(
                f"chi-squared p-value KS-uniformity over {self.chi2_replicates} tables: "
                f"{self.ks_stat:.4f} (1% critical {self.ks_critical_1pct:.4f})"
            )
        if self.corr_t_w_t_d is not None:
            out.append(f"corr(T_W, T_D) over {self.pair_count} nets: {self.corr_t_w_t_d:+.4f}")
        return out


def _truncated_trace(config: ExperimentConfig, master_seed: int, L: int, seed, depth_needed: int):
    """Forward pass built only to depth_needed: D_l depends on layers <= l alone,
    and per-layer streams make the truncation draw-for-draw identical to a full net."""
    mlp = MlpConfig(d=config.d, n=config.n, L=depth_needed)
    factory = _stream_factory(master_seed, config.n, L, seed)
    weights = sample_weights(mlp, iid_ensemble(2.0), factory)
    trace = forward(weights, _input_vector(config, master_seed, L, seed))
    return weights, trace


def run_approx_verification(config: ExperimentConfig, master_seed: int = 0, threads=None,
                            out_path=None, quiet=True) -> ApproxReport:
    """Activation-indicator independence battery at one layer of a critical net.

    Three sub-blocks, each skippable by zeroing its count: pooled activation
    fraction over `seeds` traces; `replicates` chi-squared tables, each
    cross-tabulating one random indicator pair over `members` fresh nets;
    (T_W, T_D) correlation over `pair_seeds` nets.
    """
    if config.kind != "approx_verify":
        raise ConfigError(f"run_approx_verification got kind {config.kind!r}")
    L = config.depths[0]
    layer = config.layer
    if layer >= L:
        raise ConfigError(f"layer must be < depth, got layer={layer} depth={L}")
    if config.seeds == 0 and config.replicates == 0 and config.pair_seeds == 0:
        raise ConfigError("all approx_verify sub-blocks are disabled")
    threads = resolve_threads(config, threads)
    t_start = time.perf_counter()
    rows = []

    # indicator D_layer needs preactivation Y_layer, i.e. `layer` hidden layers
    def frac_task(seed):
        _, trace = _truncated_trace(config, master_seed, L, seed, layer)
        return float(np.mean(trace.indicators[layer]))

    def chi2_task(rep):
        pick = derive_stream(master_seed, "pair", config.n, L, layer, rep)
        i = int(pick.gen.integers(config.n))
        j = int(pick.gen.integers(config.n - 1))
        if j >= i:
            j += 1
        xs = np.empty(config.members, dtype=bool)
        ys = np.empty(config.members, dtype=bool)
        for m in range(config.members):
            _, trace = _truncated_trace(config, master_seed, L, f"chi2-{rep}-{m}", layer)
            ind = trace.indicators[layer]
            xs[m] = ind[i] > 0
            ys[m] = ind[j] > 0
        result = chi2_independence(cross_tabulate(xs, ys))
        return result.chi2, result.p_value

    def pair_task(seed):
        weights, trace = _truncated_trace(config, master_seed, L, f"pairs-{seed}", layer)
        return activation_weight_stats(weights.hidden[layer - 1], trace, layer)

    def run_many(items, fn):
        if threads == 1 or len(items) <= 1:
            return [fn(it) for it in items]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))

    pooled = None
    if config.seeds:
        fracs = run_many(list(range(config.seeds)), frac_task)
        pooled = float(np.mean(fracs))
        rows += [(str(s), "d_fraction", v) for s, v in enumerate(fracs)]

    ks_stat = ks_crit = None
    if config.replicates:
        if config.members < 2:
            raise ConfigError("members must be >= 2 for the chi-squared block")
        chi_rows = run_many(list(range(config.replicates)), chi2_task)
        for rep, (chi2, p) in enumerate(chi_rows):
            rows.append((str(rep), "chi2", chi2))
            rows.append((str(rep), "chi2_p", p))
        ks_stat = ks_uniformity([p for _, p in chi_rows])
        ks_crit = 1.63 / math.sqrt(config.replicates)

    corr = None
    if config.pair_seeds:
        if config.pair_seeds < 2:
            raise ConfigError("pair_seeds must be >= 2")
        pairs = run_many(list(range(config.pair_seeds)), pair_task)
        for s, (tw, td) in enumerate(pairs):
            rows.append((str(s), "t_w", tw))
            rows.append((str(s), "t_d", td))
        corr = pearson_corr([p[0] for p in pairs], [p[1] for p in pairs])

    report = ApproxReport(
        pooled_fraction=pooled,
        bernoulli_traces=config.seeds,
        ks_stat=ks_stat,
        ks_critical_1pct=ks_crit,
        chi2_replicates=config.replicates,
        corr_t_w_t_d=corr,
        pair_count=config.pair_seeds,
        rows=rows,
    )
    if out_path is not None:
        body = APPROX_CSV_HEADER + "\n" + "".join(
            f"{config.experiment_id},{config.kind},{rep},{config.n},{L},{layer},{stat},{repr(float(v))}\n"
            for rep, stat, v in rows
        )
        _atomic_write(out_path, body)
        digest = _config_digest(config, master_seed)
        manifest = {
            "format": "jacspec-manifest-v1",
            "experiment_id": config.experiment_id,
            "kind": config.kind,
            "master_seed": master_seed,
            "config": config.canonical_dict(),
            "config_digest": digest,
            "package_version": __version__,
            "kernel_backend": kernels.BACKEND,
            "generator": "pcg64+box-muller",
            "rows": len(rows),
            "csv_sha256": hashlib.sha256(body.encode()).hexdigest(),
            "threads_used": threads,
            "wall_ms_total": int(1000 * (time.perf_counter() - t_start)),
            "finished_at": datetime.now(timezone.utc).isoformat(),
            "report": {
                "pooled_fraction": pooled,
                "ks_stat": ks_stat,
                "corr_t_w_t_d": corr,
            },
        }
        _atomic_write(str(out_path) + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return report


# --- stability condition check ----------------------------------------------------

def _condition_entry_label(entry: PruningEntry | None) -> str:
    if entry is None:
        return "keep_all"
    param = {"random": f"s={entry.s}", "magnitude_threshold": f"t={entry.t}", "magnitude_top_r": f"r={entry.r}"}[entry.method]
    return f"{entry.method}:{param}:scaling={entry.scaling}"


def run_condition_check(config: ExperimentConfig, master_seed: int = 0) -> list:
    """ConditionReport per pruning entry (keep-all when none are configured)."""
    if config.kind != "condition_check":
        raise ConfigError(f"run_condition_check got kind {config.kind!r}")
    n = config.n
    var = config.sigma_w2[0] / n
    entries = config.pruning or [None]
    out = []
    for entry in entries:
        label = _condition_entry_label(entry)
        stream = derive_stream(master_seed, "cond", n, label)

        def weight_sampler(st):
            return sample_gaussians(st, n * n, var).reshape(n, n)

        if entry is None:
            def mask_sampler(st, w):
                return np.ones((n, n))
        elif entry.method == "random":
            def mask_sampler(st, w, _e=entry):
                return pruning.random_mask(st, n, _e.s, _e.scaling, weights=w).matrix
        elif entry.method == "magnitude_threshold":
            def mask_sampler(st, w, _e=entry):
                return pruning.magnitude_mask_threshold(w, n, _e.t, _e.scaling).matrix
        else:
            def mask_sampler(st, w, _e=entry):
                return pruning.magnitude_mask_top_r(w, n, _e.r, _e.scaling).matrix

        report = pruning.check_stability_conditions(
            mask_sampler, weight_sampler, n, config.mc_samples, stream,
        )
        out.append((label, report))
    return out
