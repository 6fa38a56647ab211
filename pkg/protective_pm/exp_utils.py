import contextlib
import dataclasses
import hashlib
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import h5py
import numpy as np
import pandas as pd
import sacred

from . import systems
from .errors import ConfigError, NumericalError
from .evolution import CouplingProfile, TimeGrid, eigenstates
from .hilbert import (Grid, HermitianObservable, PhysicalConstants,
                      cell_projector, current_observable, hamiltonian, identity,
                      kinetic_energy, position, position_squared)
from .pm_protocol import (PointerConfig, PMResult, ProtectiveMeasurementRunner,
                          run_projective_measurement)
from .protection import ProtectivePotential, Zeno, prepare_protected_state
from .reconstruction import (CellPartition, PMSettings, ProtectedSystem,
                             exact_cell_profiles, run_reconstruction_campaign)
from .utils import map_in_workers


RESULT_COLUMNS = ("config_hash", "sweep_param", "sweep_value", "pointer_shift",
                  "reference_expectation", "shift_error", "fidelity", "survival",
                  "wall_time_s")

SYSTEMS = ("box", "harmonic", "ring")
SCHEMES = ("potential", "zeno")
OBSERVABLES = ("identity", "position", "position_squared", "cell_projector", "current")
SWEEP_PARAMETERS = ("T", "n_steps", "zeno_M", "cells")


# ---------------------------------------------------------------------------
# Configuration

def _positive(name: str, value, integer: bool = False):
    if (isinstance(value, bool) or not isinstance(value, (int, float, np.number))
            or not (math.isfinite(value) and value > 0)):
        raise ConfigError(name, f"{value!r} must be positive")
    if integer and int(value) != value:
        raise ConfigError(name, f"{value!r} must be an integer")


def _one_of(name: str, value, options):
    if value not in options:
        raise ConfigError(name, f"{value!r} is not one of {', '.join(map(str, options))}")


@dataclass(frozen=True)
class SystemSection:
    kind: str = "harmonic"
    n_points: int = 256
    length: float = 16.
    omega: float = 1.
    flux: float = 0.
    modulation: float = 0.
    level: int = 0

    def validate(self):
        _one_of("system.kind", self.kind, SYSTEMS)
        _positive("system.n_points", self.n_points, integer=True)
        if self.n_points < 8:
            raise ConfigError("system.n_points", f"{self.n_points} must be at least 8")
        _positive("system.length", self.length)
        _positive("system.omega", self.omega)
        if self.flux != 0 and self.kind != "ring":
            raise ConfigError("system.flux", "only a ring can enclose a flux")
        if self.modulation != 0 and self.kind != "ring":
            raise ConfigError("system.modulation", "only a ring carries the cosine modulation")
        if self.level < 0 or int(self.level) != self.level:
            raise ConfigError("system.level", f"{self.level!r} must be a non-negative integer")


@dataclass(frozen=True)
class SchemeSection:
    kind: str = "potential"
    zeno_M: int = 64
    zeno_free_evolution: str = "frozen"

    def validate(self):
        _one_of("scheme.kind", self.kind, SCHEMES)
        _positive("scheme.zeno_M", self.zeno_M, integer=True)
        _one_of("scheme.zeno_free_evolution", self.zeno_free_evolution, ("frozen", "system", "free"))


@dataclass(frozen=True)
class ObservableSection:
    kind: str = "position_squared"
    cell_start: int = 0
    cell_stop: Optional[int] = None

    def validate(self, n_points: int):
        _one_of("observable.kind", self.kind, OBSERVABLES)
        stop = n_points if self.cell_stop is None else self.cell_stop
        if not 0 <= self.cell_start < stop <= n_points:
            raise ConfigError("observable.cell_stop",
                              f"cell [{self.cell_start}, {stop}) is empty or off the grid")


@dataclass(frozen=True)
class PointerSection:
    n_points: int = 512
    x_min: float = -8.
    x_max: float = 9.
    boundary: str = "ring"
    center: float = 0.
    width: float = 0.3
    mass: Optional[float] = None
    stencil: str = "spectral"

    def validate(self):
        _positive("pointer.n_points", self.n_points, integer=True)
        if self.n_points < 8:
            raise ConfigError("pointer.n_points", f"{self.n_points} must be at least 8")
        if not self.x_max > self.x_min:
            raise ConfigError("pointer.x_max", f"{self.x_max} must exceed x_min={self.x_min}")
        _one_of("pointer.boundary", self.boundary, ("box", "ring"))
        if not self.x_min < self.center < self.x_max:
            raise ConfigError("pointer.center", f"{self.center} is off the pointer grid")
        _positive("pointer.width", self.width)
        dx = (self.x_max - self.x_min) / (self.n_points + (self.boundary == "box"))
        if self.width < 2 * dx:
            raise ConfigError("pointer.width", f"{self.width} is below 2*dx = {2*dx:.4g}")
        if self.mass is not None:
            _positive("pointer.mass", self.mass)
        _one_of("pointer.stencil", self.stencil, ("spectral", "central"))


@dataclass(frozen=True)
class TimeSection:
    T: float = 40.
    n_steps: int = 4096
    profile: str = "raised_cosine"

    def validate(self):
        _positive("time.T", self.T)
        _positive("time.n_steps", self.n_steps, integer=True)
        if self.n_steps < 16:
            raise ConfigError("time.n_steps", f"{self.n_steps} must be at least 16")
        _one_of("time.profile", self.profile, ("raised_cosine", "smooth_bump"))


@dataclass(frozen=True)
class SweepSection:
    parameter: Optional[str] = None
    values: Tuple[float, ...] = ()

    def validate(self):
        if self.parameter is None:
            if self.values:
                raise ConfigError("sweep.parameter", "values given without a parameter")
            return
        _one_of("sweep.parameter", self.parameter, SWEEP_PARAMETERS)
        if not self.values:
            raise ConfigError("sweep.values", "at least one value is needed")
        for v in self.values:
            _positive("sweep.values", v, integer=self.parameter != "T")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep.values", f"{list(self.values)} must be strictly increasing")


@dataclass(frozen=True)
class OutputSection:
    path: Optional[str] = None
    format: str = "csv"
    plots: bool = False

    def validate(self):
        _one_of("output.format", self.format, ("csv", "json"))


@dataclass(frozen=True)
class ConstantsSection:
    hbar: float = 1.
    mass: float = 1.

    def validate(self):
        _positive("constants.hbar", self.hbar)
        _positive("constants.mass", self.mass)


_SECTIONS = dict(system=SystemSection, scheme=SchemeSection,
                 observable=ObservableSection, pointer=PointerSection,
                 time=TimeSection, sweep=SweepSection, output=OutputSection,
                 constants=ConstantsSection)
_SCALARS = dict(truncation=int, solver=None, cells=int, n_samples=int, seed=int,
                n_workers=int, progressbar=bool)


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed, validated view of an experiment's nested configuration.

    `from_dict` raises `ConfigError` naming the offending field;
    `from_dict(c.to_dict()) == c`.
    """
    system: SystemSection = field(default_factory=SystemSection)
    scheme: SchemeSection = field(default_factory=SchemeSection)
    observable: ObservableSection = field(default_factory=ObservableSection)
    pointer: PointerSection = field(default_factory=PointerSection)
    time: TimeSection = field(default_factory=TimeSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)
    constants: ConstantsSection = field(default_factory=ConstantsSection)
    truncation: int = 16
    solver: Optional[str] = None
    cells: int = 64
    n_samples: int = 100_000
    seed: int = 0
    n_workers: int = 1
    progressbar: bool = False

    def validate(self) -> "ExperimentConfig":
        self.system.validate()
        self.scheme.validate()
        self.observable.validate(self.system.n_points)
        self.pointer.validate()
        self.time.validate()
        self.sweep.validate()
        self.output.validate()
        self.constants.validate()
        if not 2 <= self.truncation <= 16:
            raise ConfigError("truncation", f"{self.truncation} must be between 2 and 16")
        if self.solver is not None:
            _one_of("solver", self.solver, ("blocks", "iterative"))
            if self.solver == "blocks" and self.pointer.boundary != "ring":
                raise ConfigError("solver", "the block solver needs a ring pointer grid")
        if not 1 <= self.cells <= self.system.n_points:
            raise ConfigError("cells", f"{self.cells} must be between 1 and system.n_points")
        _positive("n_samples", self.n_samples, integer=True)
        _positive("n_workers", self.n_workers, integer=True)
        if self.scheme.kind == "zeno" and self.time.n_steps % self.scheme.zeno_M != 0:
            raise ConfigError("time.n_steps", f"{self.time.n_steps} is not a multiple "
                              f"of scheme.zeno_M={self.scheme.zeno_M}")
        return self

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExperimentConfig":
        kwargs = {}
        for key, value in d.items():
            if key in _SECTIONS:
                section = _SECTIONS[key]
                if not isinstance(value, dict):
                    raise ConfigError(key, "must be a section of key = value pairs")
                names = {f.name for f in dataclasses.fields(section)}
                for k in value:
                    if k not in names:
                        raise ConfigError(f"{key}.{k}", "unknown key")
                value = dict(value)
                if key == "sweep" and "values" in value:
                    value["values"] = tuple(float(v) for v in value["values"] or ())
                kwargs[key] = section(**value)
            elif key in _SCALARS:
                cast = _SCALARS[key]
                try:
                    kwargs[key] = value if cast is None or value is None else cast(value)
                except (TypeError, ValueError):
                    raise ConfigError(key, f"{value!r} has the wrong type") from None
            else:
                raise ConfigError(key, "unknown key")
        try:
            return cls(**kwargs).validate()
        except TypeError as e:
            raise ConfigError("config", str(e)) from e

    def to_dict(self) -> Dict[str, Any]:
        d = dataclasses.asdict(self)
        d["sweep"]["values"] = list(d["sweep"]["values"])
        return d

    def replace(self, section: Optional[str] = None, **changes) -> "ExperimentConfig":
        "copy with `changes` applied to `section` (or to the top level)"
        if section is None:
            return dataclasses.replace(self, **changes)
        new = dataclasses.replace(getattr(self, section), **changes)
        return dataclasses.replace(self, **{section: new})

    def with_sweep_value(self, value) -> "ExperimentConfig":
        p = self.sweep.parameter
        no_sweep = dataclasses.replace(self, sweep=SweepSection())
        if p == "T":
            return no_sweep.replace("time", T=float(value))
        elif p == "n_steps":
            return no_sweep.replace("time", n_steps=int(value))
        elif p == "zeno_M":
            return no_sweep.replace("scheme", zeno_M=int(value))
        elif p == "cells":
            return no_sweep.replace(cells=int(value))
        raise ValueError(f"Unknown sweep parameter: {p}")


def config_hash(config: ExperimentConfig) -> str:
    "First 16 hex digits of the SHA-256 of the canonical JSON form"
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Building the simulation from a config

def get_constants(config: ExperimentConfig) -> PhysicalConstants:
    pointer_mass = math.inf if config.pointer.mass is None else config.pointer.mass
    return PhysicalConstants(config.constants.hbar, config.constants.mass, pointer_mass)


def get_grid(system: SystemSection) -> Grid:
    if system.kind == "box":
        return systems.box_grid(system.n_points, system.length)
    elif system.kind == "harmonic":
        return systems.harmonic_grid(system.n_points, system.length / 2)
    elif system.kind == "ring":
        return systems.ring_grid(system.n_points, system.length)
    raise ValueError(f"Unknown system='{system.kind}'")


def get_potential(system: SystemSection, grid: Grid,
                  constants: PhysicalConstants) -> np.ndarray:
    if system.kind == "harmonic":
        return systems.harmonic_potential(grid, system.omega, constants)
    elif system.kind == "ring":
        return systems.ring_modulation(grid, system.modulation)
    return np.zeros(grid.n_points)


def get_system(config: ExperimentConfig) -> ProtectedSystem:
    "The protected system: grid, Hamiltonian, protection scheme and state"
    constants = get_constants(config)
    grid = get_grid(config.system)
    potential = ProtectivePotential(get_potential(config.system, grid, constants),
                                    config.system.level, config.system.flux)
    H = hamiltonian(grid, constants, potential.potential, potential.flux)
    if config.scheme.kind == "potential":
        return ProtectedSystem(grid, constants, H, potential,
                               prepare_protected_state(potential, grid, constants),
                               config.system.flux)
    elif config.scheme.kind == "zeno":
        target = prepare_protected_state(potential, grid, constants)
        free = config.scheme.zeno_free_evolution
        # "free" drops the protective potential: the kinetic energy alone moves the target
        H_free = kinetic_energy(grid, constants, config.system.flux) if free == "free" else None
        scheme = Zeno(target, config.scheme.zeno_M, free, H_free)
        return ProtectedSystem(grid, constants, H, scheme, target, config.system.flux)
    raise ValueError(f"Unknown scheme='{config.scheme.kind}'")


def get_observable(config: ExperimentConfig, grid: Grid,
                   constants: PhysicalConstants) -> HermitianObservable:
    obs = config.observable
    cell = (obs.cell_start, grid.n_points if obs.cell_stop is None else obs.cell_stop)
    if obs.kind == "identity":
        return identity(grid)
    elif obs.kind == "position":
        return position(grid)
    elif obs.kind == "position_squared":
        return position_squared(grid)
    elif obs.kind == "cell_projector":
        return cell_projector(grid, cell)
    elif obs.kind == "current":
        return current_observable(grid, cell, constants, config.system.flux)
    raise ValueError(f"Unknown observable='{obs.kind}'")


def get_pointer(config: ExperimentConfig) -> PointerConfig:
    p = config.pointer
    grid = Grid(p.n_points, p.x_min, p.x_max, p.boundary)
    mass = math.inf if p.mass is None else p.mass
    return PointerConfig(grid, p.center, p.width, mass, p.stencil)


def get_settings(config: ExperimentConfig) -> PMSettings:
    return PMSettings(get_pointer(config),
                      TimeGrid(config.time.T, config.time.n_steps),
                      config.truncation, config.time.profile, config.solver)


# ---------------------------------------------------------------------------
# Recording

def _missing(dtype):
    "NaN, or -2**63 for integers"
    return np.nan if np.issubdtype(dtype, np.floating) else -2**63


class HDF5Metrics:
    """Per-step scalars in an HDF5 file, buffered in chunks of `chunk_size`
    rows. Every row has a "steps" entry; names missing from a row hold NaN.
    After the first flush the file is in SWMR mode, so it can be read while a
    run is still writing, and no new names can be added."""
    def __init__(self, path, mode="w", chunk_size=1024):
        self.path = path
        self.mode = mode
        self.chunk_size = chunk_size
        self._step = -2**63
        self._cache = {}
        self._row = -1
        self._written = 0
        self._created = False
        self.last_flush = time.time()

    def __enter__(self):
        self.f = h5py.File(self.path, self.mode, libver="latest", rdcc_nbytes=0)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.flush()
        self.f.close()

    def add_scalar(self, name, value, step, dtype=np.float64):
        if step > self._step:
            self._row += 1
            if self._row >= self.chunk_size:
                self._write(self.chunk_size)
                self._written += self.chunk_size
                self._row = 0
                for v in self._cache.values():
                    v[:] = _missing(v.dtype)
            self._step = step
            self._append("steps", step, np.int64)
        elif step < self._step:
            raise ValueError(f"step went backwards ({self._step} -> {step})")
        self._append(name, value, dtype)

    def _append(self, name, value, dtype):
        try:
            arr = self._cache[name]
        except KeyError:
            arr = self._cache[name] = np.full(self.chunk_size, _missing(dtype), dtype=dtype)
        arr[self._row] = value

    def _write(self, length: int):
        if not self._created:
            for name, arr in self._cache.items():
                self.f.create_dataset(name, dtype=arr.dtype, shape=(0,),
                                      chunks=(self.chunk_size,), maxshape=(None,),
                                      fletcher32=True, fillvalue=_missing(arr.dtype))
            self.f.swmr_mode = True
            self._created = True
        for name, arr in self._cache.items():
            if name not in self.f:
                raise ValueError(f"cannot add '{name}' to {self.path} after the first flush")
            dset = self.f[name]
            end = self._written + length
            if end > len(dset):
                dset.resize(end, axis=0)
            dset[self._written:end] = arr[:length]

    def flush(self, every_s=0):
        "flush every `every_s` seconds"
        if self._row < 0:
            return
        now = time.time()
        if every_s <= 0 or now - self.last_flush > every_s:
            self.last_flush = now
            self._write(self._row + 1)
            self.f.flush()


def load_metrics(path) -> Dict[str, np.ndarray]:
    with h5py.File(path, "r", swmr=True) as f:
        return {k: np.asarray(v) for k, v in f.items()}


def sneaky_artifact(_run, name):
    """`artifact_event` of `sacred.observers.FileStorageObserver` without the
    copy: registers `name` as an artifact and returns its path in the run
    directory."""
    obs = _run.observers[0]
    assert isinstance(obs, sacred.observers.FileStorageObserver)
    obs.run_entry["artifacts"].append(name)
    obs.save_json(obs.run_entry, "run.json")
    return Path(obs.dir)/name


def directory_artifact(directory) -> Callable[[str], Path]:
    "artifact function writing plain files into `directory`"
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    return lambda name: directory/name


@contextlib.contextmanager
def exit_codes(log):
    "Exit with 2 on configuration errors and 3 on numerical failures"
    try:
        yield
    except ConfigError as e:
        log.error(f"invalid configuration: {e}")
        sys.exit(2)
    except NumericalError as e:
        log.error(f"numerical failure: {type(e).__name__}: {e}")
        sys.exit(3)


def write_rows(rows: List[Dict[str, Any]], artifact: Callable[[str], Path],
               fmt: str = "csv", name: str = "results",
               columns=RESULT_COLUMNS) -> Path:
    "Write result rows with the exact column order, as CSV or JSON"
    df = pd.DataFrame(rows, columns=list(columns))
    if fmt == "csv":
        path = artifact(f"{name}.csv")
        df.to_csv(path, index=False)
    elif fmt == "json":
        path = artifact(f"{name}.json")
        df.to_json(path, orient="records", indent=2)
    else:
        raise ValueError(f"Unknown format='{fmt}'")
    return path


def _row(hash_: str, sweep_param, sweep_value, result: Optional[PMResult] = None,
         **overrides) -> Dict[str, Any]:
    row = dict(config_hash=hash_, sweep_param=sweep_param, sweep_value=sweep_value,
               pointer_shift=math.nan, reference_expectation=math.nan,
               shift_error=math.nan, fidelity=math.nan, survival=math.nan,
               wall_time_s=math.nan)
    if result is not None:
        row.update(pointer_shift=result.pointer_shift,
                   reference_expectation=result.reference_expectation,
                   shift_error=result.shift_error, fidelity=result.system_fidelity,
                   survival=result.cumulative_survival)
    row.update(overrides)
    return row


# ---------------------------------------------------------------------------
# Commands

def measure(config: ExperimentConfig, metrics_saver=None) -> PMResult:
    "One protective measurement as described by `config`"
    system = get_system(config)
    A = get_observable(config, system.grid, system.constants)
    settings = get_settings(config)
    runner = ProtectiveMeasurementRunner(
        system.hamiltonian, A, system.scheme, settings.pointer, settings.time,
        config.truncation, profile=CouplingProfile(config.time.profile, config.time.T),
        constants=system.constants, solver=config.solver, metrics_saver=metrics_saver)
    return runner.run(progressbar=config.progressbar)


def _traced_measurement(config: ExperimentConfig, trace_path: Optional[Path]) -> PMResult:
    if trace_path is None:
        return measure(config)
    with HDF5Metrics(trace_path, "w") as metrics_saver:
        return measure(config, metrics_saver)


def cmd_pm(config: ExperimentConfig, artifact: Callable[[str], Path]) -> List[Dict[str, Any]]:
    """One protective measurement, or a sweep of them when the config has a
    sweep section. Writes the result rows and the pointer trace."""
    if config.sweep.parameter is not None:
        return cmd_sweep(config, artifact)
    start = time.perf_counter()
    result = _traced_measurement(config, artifact("traces.h5"))
    rows = [_row(config_hash(config), None, None, result,
                 wall_time_s=time.perf_counter() - start)]
    write_rows(rows, artifact, config.output.format)
    if config.output.plots:
        from .plot import plot_pointer_trace
        plot_pointer_trace(result).savefig(artifact("pointer_trace.png"))
    return rows


def _reconstruction_row(config: ExperimentConfig, hash_: str, sweep_param, sweep_value,
                        artifact=None, n_workers: int = 1):
    start = time.perf_counter()
    system = get_system(config)
    partition = CellPartition.uniform(system.grid, config.cells)
    report = run_reconstruction_campaign(system, partition, get_settings(config),
                                         truth=system.state, n_workers=n_workers,
                                         progressbar=config.progressbar)
    row = _row(hash_, sweep_param, sweep_value, fidelity=report.fidelity_to_truth,
               shift_error=float(np.nanmax(report.per_cell_pm_errors)),
               wall_time_s=time.perf_counter() - start)
    return row, report, system, partition


def _sweep_point(args):
    config, hash_, index, value, trace_path = args
    point = config.with_sweep_value(value)
    if config.sweep.parameter == "cells":
        row, *_ = _reconstruction_row(point, hash_, "cells", value)
        return row
    start = time.perf_counter()
    try:
        result = _traced_measurement(point, trace_path)
    except NumericalError as e:
        # one failed point leaves a row of NaNs, the rest of the sweep goes on
        warnings.warn(f"{config.sweep.parameter}={value}: {type(e).__name__}: {e}")
        result = None
    return _row(hash_, config.sweep.parameter, value, result,
                wall_time_s=time.perf_counter() - start)


def cmd_sweep(config: ExperimentConfig, artifact: Callable[[str], Path]) -> List[Dict[str, Any]]:
    """One run per sweep value, dispatched to `n_workers` processes. Rows come
    back in sweep order and are written once."""
    if config.sweep.parameter is None:
        raise ConfigError("sweep.parameter", "the sweep command needs a sweep section")
    hash_ = config_hash(config)
    quiet = config.replace(progressbar=False) if config.n_workers > 1 else config
    jobs = [(quiet, hash_, i, value,
             None if config.sweep.parameter == "cells" else artifact(f"traces_{i:03d}.h5"))
            for i, value in enumerate(config.sweep.values)]
    rows = map_in_workers(_sweep_point, jobs, config.n_workers)
    write_rows(rows, artifact, config.output.format)
    if config.output.plots:
        from .plot import plot_sweep
        plot_sweep(pd.DataFrame(rows)).savefig(artifact("sweep.png"))
    return rows


def cmd_reconstruct(config: ExperimentConfig, artifact: Callable[[str], Path]):
    """Density and current campaigns over `cells` cells, reconstruction, and
    the comparison with the true state. Writes the fidelity row, the per-cell
    table and a summary."""
    hash_ = config_hash(config)
    row, report, system, partition = _reconstruction_row(
        config, hash_, None, None, n_workers=config.n_workers)
    write_rows([row], artifact, config.output.format)

    rho_exact, j_exact = exact_cell_profiles(
        system.state, partition, system.constants, system.flux)
    cells = pd.DataFrame(dict(
        cell=np.arange(len(partition)),
        start=[a for a, _ in partition.cells], stop=[b for _, b in partition.cells],
        center=partition.centers, volume=partition.volumes,
        rho=report.rho_cells, j=report.j_cells,
        rho_exact=rho_exact, j_exact=j_exact,
        pm_error=report.per_cell_pm_errors, clamped=report.clamped))
    cells.to_csv(artifact("cells.csv"), index=False)
    with open(artifact("reconstruction.json"), "w") as f:
        json.dump(dict(config_hash=hash_, fidelity=report.fidelity_to_truth,
                       winding_number=report.winding_number,
                       n_clamped=int(report.clamped.sum()),
                       failures=report.failures), f, indent=2, sort_keys=True)
    if config.output.plots:
        from .plot import plot_reconstruction
        plot_reconstruction(report, system.state, partition).savefig(
            artifact("reconstruction.png"))
    return [row], report


def cmd_born(config: ExperimentConfig, artifact: Callable[[str], Path]) -> List[Dict[str, Any]]:
    """Projective measurements of the observable on the protected state:
    histogram of outcomes and their mean. Same seed, same files."""
    system = get_system(config)
    A = get_observable(config, system.grid, system.constants)
    samples, mean = run_projective_measurement(A, system.state, config.n_samples, config.seed)
    values, counts = np.unique(samples, return_counts=True)
    rows = [dict(value=float(v), count=int(c), frequency=c / len(samples))
            for v, c in zip(values, counts)]
    write_rows(rows, artifact, "csv", name="histogram",
               columns=("value", "count", "frequency"))
    std = float(samples.std())
    with open(artifact("born.json"), "w") as f:
        json.dump(dict(config_hash=config_hash(config), n_samples=config.n_samples,
                       seed=config.seed, mean=mean, std=std,
                       standard_error=std / math.sqrt(config.n_samples),
                       n_distinct=len(values)), f, indent=2, sort_keys=True)
    return rows


def cmd_eigen(config: ExperimentConfig, artifact: Callable[[str], Path]) -> List[Dict[str, Any]]:
    "The `truncation` lowest levels of the system Hamiltonian"
    system = get_system(config)
    pairs = eigenstates(system.hamiltonian, config.truncation)
    energies = [e for e, _ in pairs]
    rows = [dict(level=i, energy=e, gap=(energies[i+1] - e) if i+1 < len(energies) else math.nan)
            for i, e in enumerate(energies)]
    write_rows(rows, artifact, "csv", name="spectrum", columns=("level", "energy", "gap"))
    return rows
