"""Experiment configuration, seeded work pools and CSV/JSON result files.

Every experiment is described by an :class:`ExperimentConfig`, read from a flat
``key = value`` file and overridden by command-line flags. Runs write their
outputs plus a resolved copy of the configuration into the output directory.

Reproducibility rests on two rules: each grid cell draws its randomness from
``SeedSequence(master_seed, spawn_key=(cell_index,))`` so results do not depend
on scheduling, and rows are sorted before anything is written.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .ansatz import AnsatzCircuit, Family, build_ansatz, custom_ansatz, word
from .ensembles import EnsembleSpec, build_training_set
from .lie import ansatz_closure
from .metric import NoPlateauError, RankProtocol, saturation_profile, unitary_bound
from .training import TrainResult, cost_test, preset, train

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ENV_OUTPUT_DIR = "DQFIM_OUTPUT_DIR"
ENV_WORKERS = "DQFIM_WORKERS"

COLUMNS = (
    "schema_version",
    "experiment_id",
    "family",
    "N",
    "M",
    "G",
    "L",
    "seed",
    "C_train",
    "C_test",
    "E",
    "converged",
    "empirical_risk",
    "wall_time",
    "D_L",
    "R_L",
    "M_c",
    "R_inf",
    "L_c",
    "L_c_approx",
    "dla_dim",
    "spectral_gap",
    "status",
)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _int_list(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    text = str(text).strip()
    if not text:
        return ()
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(v) for v in part.split(".."))
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(conv):
    def parse(text):
        if text is None or (isinstance(text, str) and text.strip().lower() in ("", "none")):
            return None
        return conv(text)

    return parse


def _str_list(text) -> tuple[str, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(str(v) for v in text)
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of the ``rank``, ``dla``, ``train``, ``sweep`` and ``bound`` commands.

    Grids accept comma lists and inclusive ranges (``"1..5,8"``). The M grid
    is given either directly (``m_grid``, each value a multiple of the
    parameters per layer) or as depths (``g_grid``).
    """

    experiment_id: str = "run"
    family: str = "he"
    n_qubits: int = 2
    generators: tuple[str, ...] = ()  # dense Pauli labels for family=custom
    layers: int | None = None
    g_grid: tuple[int, ...] = ()
    m_grid: tuple[int, ...] = ()
    target_layers: int | None = None
    ensemble: str = "haar"
    test_ensemble: str | None = None
    l_grid: tuple[int, ...] = (1,)
    l_max: int = 1
    reps: int = 1
    seed: int = 0
    optimizer: str = "bfgs"
    convergence_threshold: float | None = None
    stop_threshold: float | None = 1e-8
    max_steps: int | None = None
    n_test: int = 100
    theta0_from_target: bool = False
    baseline_draws: int = 10
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    n_theta: int = 5
    n_data: int = 3
    plateau_window: int = 3
    g_max: int = 200
    cap: int | None = None
    with_dla: bool = False
    overlay: bool = True
    overlay_l_max: int | None = None
    record_wall_time: bool = False
    output: str = "results"
    workers: int = 0

    # -- construction -----------------------------------------------------

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            name = key.strip().lower().replace("-", "_")
            name = _ALIASES.get(name, name)
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                kwargs[name] = _PARSERS[name](raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
        return cls(**kwargs)

    def override(self, values: dict) -> "ExperimentConfig":
        base = {k: v for k, v in asdict(self).items()}
        parsed = ExperimentConfig.from_mapping({k: v for k, v in values.items() if v is not None})
        given = {_ALIASES.get(k.replace("-", "_"), k.replace("-", "_")) for k, v in values.items() if v is not None}
        base.update({k: getattr(parsed, k) for k in given})
        return ExperimentConfig(**base)

    # -- derived quantities ---------------------------------------------

    def ansatz(self, n_layers: int) -> AnsatzCircuit:
        if Family.parse(self.family) is Family.CUSTOM:
            words = []
            for label in self.generators:
                if len(label) != self.n_qubits:
                    raise ConfigError(f"generator {label!r} does not have {self.n_qubits} letters")
                words.append(word(*[(q, ch) for q, ch in enumerate(label.upper()) if ch != "I"]))
            if not words:
                raise ConfigError("family=custom needs a non-empty 'generators' list")
            return custom_ansatz(self.n_qubits, n_layers, words)
        return build_ansatz(self.family, self.n_qubits, n_layers)

    @property
    def params_per_layer(self) -> int:
        return self.ansatz(1).params_per_layer

    def depth_grid(self) -> tuple[int, ...]:
        K = self.params_per_layer
        if self.m_grid:
            bad = [m for m in self.m_grid if m % K or m <= 0]
            if bad:
                raise ConfigError(f"M values {bad} are not positive multiples of K={K}")
            return tuple(m // K for m in self.m_grid)
        if self.g_grid:
            return self.g_grid
        if self.layers:
            return (self.layers,)
        raise ConfigError("no depth given: set layers, g_grid or m_grid")

    def train_spec(self) -> EnsembleSpec:
        return EnsembleSpec.parse(self.ensemble, self.n_qubits)

    def test_spec(self) -> EnsembleSpec:
        return EnsembleSpec.parse(self.test_ensemble or self.ensemble, self.n_qubits)

    def protocol(self) -> RankProtocol:
        return RankProtocol(
            n_theta=self.n_theta,
            plateau_window=self.plateau_window,
            g_max=self.g_max,
            n_data=self.n_data,
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
        )

    def train_config(self):
        overrides = {"n_test": self.n_test, "stop_threshold": self.stop_threshold}
        if self.convergence_threshold is not None:
            overrides["convergence_threshold"] = self.convergence_threshold
        if self.max_steps is not None:
            overrides["max_steps"] = self.max_steps
        return preset(self.optimizer, **overrides)

    def n_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def validate(self, command: str) -> None:
        """Raise :class:`ConfigError` for anything that would fail later."""
        try:
            Family.parse(self.family)
            self.train_spec()
            self.test_spec()
            self.train_config()
            self.protocol()
            self.ansatz(1)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.n_qubits < 1:
            raise ConfigError("n_qubits must be >= 1")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.baseline_draws < 1:
            raise ConfigError("baseline_draws must be >= 1")
        if command == "rank" and self.l_max < 1:
            raise ConfigError("l_max must be >= 1")
        if command in ("train", "sweep"):
            if not self.l_grid:
                raise ConfigError("l_grid is empty")
            if min(self.l_grid) < 0:
                raise ConfigError("l_grid entries must be >= 0")
            grid = self.depth_grid()
            if not grid or min(grid) < 1:
                raise ConfigError("depth grid is empty or has non-positive entries")
            if self.theta0_from_target and self.target_depth() not in grid:
                raise ConfigError("theta0_from_target needs target_layers equal to a swept depth")

    def target_depth(self) -> int:
        return self.target_layers or max(self.depth_grid())

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif v is None:
                v = "none"
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_ALIASES = {"n": "n_qubits", "lmax": "l_max", "m": "m_grid", "l": "l_grid", "g": "layers", "out": "output"}

_PARSERS = {
    "experiment_id": str,
    "family": str,
    "n_qubits": int,
    "generators": _str_list,
    "layers": _opt(int),
    "g_grid": _int_list,
    "m_grid": _int_list,
    "target_layers": _opt(int),
    "ensemble": str,
    "test_ensemble": _opt(str),
    "l_grid": _int_list,
    "l_max": int,
    "reps": int,
    "seed": int,
    "optimizer": str,
    "convergence_threshold": _opt(float),
    "stop_threshold": _opt(float),
    "max_steps": _opt(int),
    "n_test": int,
    "theta0_from_target": _bool,
    "baseline_draws": int,
    "rel_tol": float,
    "abs_tol": float,
    "n_theta": int,
    "n_data": int,
    "plateau_window": int,
    "g_max": int,
    "cap": _opt(int),
    "with_dla": _bool,
    "overlay": _bool,
    "overlay_l_max": _opt(int),
    "record_wall_time": _bool,
    "output": str,
    "workers": int,
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path=None, overrides: dict | None = None, environ=None) -> ExperimentConfig:
    """Config file, then environment overrides, then explicit overrides."""
    environ = os.environ if environ is None else environ
    values: dict = {}
    if path is not None:
        try:
            values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
    if environ.get(ENV_OUTPUT_DIR):
        values["output"] = environ[ENV_OUTPUT_DIR]
    if environ.get(ENV_WORKERS):
        values["workers"] = environ[ENV_WORKERS]
    cfg = ExperimentConfig.from_mapping(values)
    if overrides:
        cfg = cfg.override(overrides)
    return cfg


# --------------------------------------------------------------------------
# result rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r} in a result row")
        return f"{float(value):.17g}"
    return str(value)


def make_row(**values) -> dict:
    unknown = set(values) - set(COLUMNS)
    if unknown:
        raise KeyError(f"unknown result columns {sorted(unknown)}")
    row = {c: None for c in COLUMNS}
    row.update(values)
    row["schema_version"] = SCHEMA_VERSION
    return row


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in COLUMNS])
    return buf.getvalue()


def read_results(path) -> list[dict]:
    """Read a result CSV, rejecting files written with another schema."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected columns")
        rows = []
        for row in reader:
            if row["schema_version"] != str(SCHEMA_VERSION):
                raise ValueError(f"{path}: unsupported schema_version {row['schema_version']!r}")
            rows.append(row)
    return rows


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    return path


def write_config(cfg: ExperimentConfig, command: str) -> Path:
    return _write(Path(cfg.output), f"{cfg.experiment_id}.{command}.config", cfg.to_text())


# --------------------------------------------------------------------------
# rank


@dataclass
class RankOutcome:
    rows: list
    summary: dict
    csv_path: Path | None = None
    json_path: Path | None = None


def run_rank(cfg: ExperimentConfig, write: bool = True) -> RankOutcome:
    """Saturation profile over ``L = 1..l_max`` with per-draw effective dimensions.

    Raises :class:`NoPlateauError` when the ranks do not saturate; the partial
    rows are still written.
    """
    cfg.validate("rank")
    spec = cfg.train_spec()
    draws: list[dict] = []
    K = cfg.params_per_layer

    def record(L, redraw, G, M, draw, D, gap):
        draws.append(
            make_row(
                experiment_id=cfg.experiment_id, family=cfg.family, N=cfg.n_qubits, M=M, G=G, L=L,
                seed=redraw * cfg.n_theta + draw, D_L=D, spectral_gap=_finite_gap(gap), status="draw",
            )
        )

    dla_dim = None
    if cfg.with_dla:
        span = ansatz_closure(cfg.ansatz(1), cap=cfg.cap)
        dla_dim = None if span.truncated else span.dim

    try:
        prof = saturation_profile(
            cfg.ansatz(1), cfg.n_qubits, spec, cfg.l_max, cfg.protocol(), seed=cfg.seed, record=record
        )
    except NoPlateauError:
        if write:
            write_config(cfg, "rank")
            _write(Path(cfg.output), f"{cfg.experiment_id}_rank.csv", rows_to_csv(_sorted(draws)))
        raise

    rows = list(draws)
    for rec in prof.records:
        rows.append(
            make_row(
                experiment_id=cfg.experiment_id, family=cfg.family, N=cfg.n_qubits, M=rec["M_c"], G=rec["G_c"],
                L=rec["L"], R_L=rec["R"], M_c=rec["M_c"], R_inf=prof.R_inf, L_c=prof.L_c,
                L_c_approx=prof.L_c_approx, dla_dim=dla_dim, spectral_gap=_finite_gap(rec["gap"]),
                status="profile",
            )
        )
    rows = _sorted(rows)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment_id": cfg.experiment_id,
        "family": cfg.family,
        "N": cfg.n_qubits,
        "ensemble": spec.label(),
        "K": K,
        "R_L": {str(k): v for k, v in prof.R.items()},
        "M_c": {str(k): v for k, v in prof.M_c.items()},
        "R_1": prof.R_1,
        "R_inf": prof.R_inf,
        "L_c": prof.L_c,
        "L_c_approx": prof.L_c_approx,
        "unitary_bound": {str(L): unitary_bound(spec.dim, L) for L in prof.R},
        "dla_dim": dla_dim,
    }
    out = RankOutcome(rows, summary)
    if write:
        write_config(cfg, "rank")
        out.csv_path = _write(Path(cfg.output), f"{cfg.experiment_id}_rank.csv", rows_to_csv(rows))
        out.json_path = _write(
            Path(cfg.output), f"{cfg.experiment_id}_rank.json", json.dumps(summary, indent=2, sort_keys=True) + "\n"
        )
    return out


def _finite_gap(gap: float) -> float | None:
    return float(gap) if math.isfinite(gap) else None


def _sorted(rows):
    def key(r):
        return tuple(-1 if r[c] is None else r[c] for c in ("M", "L", "seed")) + (r["status"] or "",)

    return sorted(rows, key=key)


# --------------------------------------------------------------------------
# dla and bound


def run_dla(cfg: ExperimentConfig) -> dict:
    cfg.validate("dla")
    span = ansatz_closure(cfg.ansatz(1), cap=cfg.cap)
    return {"family": cfg.family, "N": cfg.n_qubits, "dim": span.dim, "truncated": span.truncated}


def bound_table(n_qubits: int, l_max: int) -> list[tuple[int, int]]:
    d = 1 << n_qubits
    return [(L, unitary_bound(d, L)) for L in range(1, l_max + 1)]


# --------------------------------------------------------------------------
# training cells


@dataclass(frozen=True)
class Cell:
    index: int
    G: int
    L: int
    rep: int


def cells(cfg: ExperimentConfig) -> list[Cell]:
    """Grid cells in canonical (depth, L, rep) order; the index feeds the seed."""
    out = []
    for G in cfg.depth_grid():
        for L in cfg.l_grid:
            for rep in range(cfg.reps):
                out.append(Cell(len(out), G, L, rep))
    return out


def cell_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def _target(cfg: ExperimentConfig, rep: int):
    """Target parameters shared by all cells of one repetition."""
    target = cfg.ansatz(cfg.target_depth())
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2**31, rep)))
    return target, target.random_params(rng)


def run_cell(cfg: ExperimentConfig, cell: Cell) -> dict:
    """Train one (depth, L, repetition) cell and return its result row.

    Repetition ``r`` uses the same target unitary and, for every ``L``, a
    prefix of the same input sequence, so that cells differ only in the
    quantity being swept.
    """
    t0 = time.perf_counter()
    ansatz = cfg.ansatz(cell.G)
    target, theta_g = _target(cfg, cell.rep)
    data_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2**31 + 1, cell.rep)))
    rng = cell_rng(cfg.seed, cell.index)
    test_seed = int(rng.integers(2**63))
    base = dict(
        experiment_id=cfg.experiment_id, family=cfg.family, N=cfg.n_qubits, M=ansatz.n_params, G=cell.G,
        L=cell.L, seed=cell.rep,
    )
    if cfg.theta0_from_target:
        theta0 = theta_g.copy()
    else:
        theta0 = ansatz.random_params(rng)
    if cell.L == 0:
        # no data: the untrained circuit defines the test-error baseline
        c_test, _ = cost_test(
            ansatz, theta0, theta_g, cfg.test_spec(), cfg.n_test, np.random.default_rng(test_seed), target=target
        )
        wall = time.perf_counter() - t0 if cfg.record_wall_time else None
        return make_row(**base, C_test=c_test, E=0, converged=False, wall_time=wall, status="untrained")
    L_all = max(cfg.l_grid)
    S = build_training_set(target, theta_g, cfg.train_spec(), L_all, data_rng).head(cell.L)
    tc = replace(cfg.train_config(), test_seed=test_seed)
    res: TrainResult = train(ansatz, theta0, S, theta_g, cfg.test_spec(), tc, target=target)
    wall = time.perf_counter() - t0 if cfg.record_wall_time else None
    return make_row(
        **base,
        C_train=res.c_train_final,
        C_test=res.c_test_final,
        E=res.steps_E,
        converged=res.converged,
        empirical_risk=res.empirical_risk,
        wall_time=wall,
        status=res.status,
    )


def _safe_cell(args) -> dict:
    cfg, cell = args
    try:
        return run_cell(cfg, cell)
    except Exception as exc:  # recorded per row; the sweep keeps going
        log.error("cell %s failed: %s", cell, exc)
        ansatz = cfg.ansatz(cell.G)
        return make_row(
            experiment_id=cfg.experiment_id, family=cfg.family, N=cfg.n_qubits, M=ansatz.n_params, G=cell.G,
            L=cell.L, seed=cell.rep, status=f"error:{type(exc).__name__}",
        )


def run_cells(cfg: ExperimentConfig, todo: list[Cell]) -> list[dict]:
    jobs = [(cfg, c) for c in todo]
    workers = min(cfg.n_workers(), max(1, len(jobs)))
    if workers == 1:
        rows = [_safe_cell(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_safe_cell, jobs, chunksize=1))
    return _sorted(rows)


@dataclass
class SweepOutcome:
    rows: list
    overlay: dict | None
    success_fraction: float
    csv_path: Path | None = None
    overlay_path: Path | None = None


def boundary_overlay(cfg: ExperimentConfig) -> dict:
    """Predicted ``M_c(L)`` and ``L_c`` for the sweep's family and ensemble."""
    l_max = cfg.overlay_l_max or max(max(cfg.l_grid), 1)
    prof = saturation_profile(cfg.ansatz(1), cfg.n_qubits, cfg.train_spec(), l_max, cfg.protocol(), seed=cfg.seed)
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment_id": cfg.experiment_id,
        "family": cfg.family,
        "N": cfg.n_qubits,
        "ensemble": cfg.train_spec().label(),
        "R_L": {str(k): v for k, v in prof.R.items()},
        "M_c": {str(k): v for k, v in prof.M_c.items()},
        "R_inf": prof.R_inf,
        "R_1": prof.R_1,
        "L_c": prof.L_c,
        "L_c_approx": prof.L_c_approx,
    }


def baseline_test_error(cfg: ExperimentConfig, G: int | None = None) -> float:
    """Mean test error of untrained circuits over ``baseline_draws`` random draws."""
    G = G or max(cfg.depth_grid())
    ansatz = cfg.ansatz(G)
    target, theta_g = _target(cfg, 0)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(2**31 + 2,)))
    vals = [
        cost_test(ansatz, ansatz.random_params(rng), theta_g, cfg.test_spec(), cfg.n_test, rng, target=target)[0]
        for _ in range(cfg.baseline_draws)
    ]
    return float(np.mean(vals))


def run_sweep(cfg: ExperimentConfig, write: bool = True) -> SweepOutcome:
    """All (M, L, rep) cells, the aggregated CSV and the boundary overlay."""
    cfg.validate("sweep")
    rows = run_cells(cfg, cells(cfg))
    ok = sum(not r["status"].startswith("error") for r in rows)
    out = SweepOutcome(rows, None, ok / len(rows))
    if write:
        write_config(cfg, "sweep")
        out.csv_path = _write(Path(cfg.output), f"{cfg.experiment_id}_sweep.csv", rows_to_csv(rows))
    if cfg.overlay:
        out.overlay = boundary_overlay(cfg)
        out.overlay["C_test_baseline"] = baseline_test_error(cfg)
        if write:
            out.overlay_path = _write(
                Path(cfg.output),
                f"{cfg.experiment_id}_overlay.json",
                json.dumps(out.overlay, indent=2, sort_keys=True) + "\n",
            )
    return out


def run_train(cfg: ExperimentConfig, write: bool = True) -> list[dict]:
    """``reps`` seeded trainings at the first depth and first L of the grids."""
    cfg.validate("train")
    G, L = cfg.depth_grid()[0], cfg.l_grid[0]
    todo = [Cell(rep, G, L, rep) for rep in range(cfg.reps)]
    rows = run_cells(cfg, todo)
    if write:
        write_config(cfg, "train")
        _write(Path(cfg.output), f"{cfg.experiment_id}_train.csv", rows_to_csv(rows))
    return rows


def cell_means(rows, column: str) -> dict[tuple[int, int], float]:
    """Mean of ``column`` per ``(M, L)`` over repetitions, skipping empty values."""
    acc: dict[tuple[int, int], list[float]] = {}
    for r in rows:
        v = r[column]
        if v is None or v == "":
            continue
        acc.setdefault((int(r["M"]), int(r["L"])), []).append(float(v))
    return {k: float(np.mean(v)) for k, v in acc.items()}
