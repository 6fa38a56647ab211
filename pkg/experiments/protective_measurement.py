"""
Protective measurement experiments: single runs, convergence sweeps,
wave-function reconstruction, projective (Born rule) sampling and spectra.

    python experiments/protective_measurement.py pm with time.T=20
    python experiments/protective_measurement.py sweep with sweep.parameter=T "sweep.values=[5,10,20,40]"
    python experiments/protective_measurement.py reconstruct with system.kind=ring system.flux=0.02 system.level=5 system.length=6.283185307179586
    python experiments/protective_measurement.py born with n_samples=1000000
    python experiments/protective_measurement.py eigen
"""

import os
from pathlib import Path

from sacred import Experiment
from sacred.utils import apply_backspaces_and_linefeeds
from sacred.observers import FileStorageObserver

from protective_pm import exp_utils

ex = Experiment("protective_measurement")
ex.captured_out_filter = apply_backspaces_and_linefeeds


@ex.config
def config():
    # the measured system: "harmonic" (centred at 0), "box" ([0, length]) or "ring"
    # (circumference `length`, threaded by `flux` flux quanta, with an optional
    # potential `modulation`*cos). `level` is the protected energy level.
    system = dict(kind="harmonic", n_points=256, length=16., omega=1., flux=0.,
                  modulation=0., level=0)
    # protection: "potential" (adiabatic, the system's own potential) or "zeno"
    # (zeno_M equally spaced projections; between them the system is "frozen",
    # evolves under its Hamiltonian, "system", or under the kinetic energy alone,
    # "free")
    scheme = dict(kind="potential", zeno_M=64, zeno_free_evolution="frozen")
    # measured observable: "identity", "position", "position_squared",
    # "cell_projector" or "current"; cells are grid index ranges [cell_start, cell_stop)
    observable = dict(kind="position_squared", cell_start=0, cell_stop=None)
    # pointer grid and initial Gaussian packet; mass=None freezes the pointer,
    # stencil of the momentum operator: "spectral" or "central"
    pointer = dict(n_points=512, x_min=-8., x_max=9., boundary="ring", center=0.,
                   width=0.3, mass=None, stencil="spectral")
    # measurement duration, number of Crank-Nicolson steps, coupling profile
    # ("raised_cosine" or "smooth_bump")
    time = dict(T=40., n_steps=4096, profile="raised_cosine")
    # hbar and the system mass
    constants = dict(hbar=1., mass=1.)
    # number of system levels kept in the joint state (2 to 16)
    truncation = 16
    # joint-space solver: None (automatic), "blocks" or "iterative"
    solver = None
    # optional sweep: parameter is "T", "n_steps", "zeno_M" or "cells"
    sweep = dict(parameter=None, values=[])
    # number of cells of the reconstruction partition
    cells = 64
    # number of projective measurements for `born`
    n_samples = 100000
    # random seed of the run (used by the Born sampler)
    seed = 0
    # output directory (None: the run directory of the observer), "csv" or
    # "json" results, and whether to save figures
    output = dict(path=None, format="csv", plots=False)
    # worker processes for sweeps and cell campaigns
    n_workers = 1
    # whether a progressbar should be printed during the evolution
    progressbar = False
    # directory where the runs will be stored
    log_dir = str(Path(__file__).resolve().parent.parent/"logs")
    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)
        ex.observers.append(FileStorageObserver(log_dir))


CONFIG_KEYS = ("system", "scheme", "observable", "pointer", "time", "constants",
               "truncation", "solver", "sweep", "cells", "n_samples", "seed",
               "output", "n_workers", "progressbar")


@ex.capture
def get_config(_config):
    return exp_utils.ExperimentConfig.from_dict(
        {k: _config[k] for k in CONFIG_KEYS if k in _config})


@ex.capture
def get_artifact(output, _run):
    if output["path"] is not None:
        return exp_utils.directory_artifact(output["path"])
    if _run.observers:
        return lambda name: exp_utils.sneaky_artifact(_run, name)
    return exp_utils.directory_artifact(".")


def _run_command(command, _log):
    with exp_utils.exit_codes(_log):
        config = get_config()
        _log.info(f"{command.__name__} with config {exp_utils.config_hash(config)}")
        result = command(config, get_artifact())
    return result


@ex.command
def sweep(_log):
    rows = _run_command(exp_utils.cmd_sweep, _log)
    return {"shift_error": [r["shift_error"] for r in rows],
            "fidelity": [r["fidelity"] for r in rows]}


@ex.command
def reconstruct(_log):
    rows, report = _run_command(exp_utils.cmd_reconstruct, _log)
    if report.clamped.any():
        _log.warning(f"{int(report.clamped.sum())} cell densities were clamped at 0")
    return {"fidelity": rows[0]["fidelity"], "winding_number": report.winding_number}


@ex.command
def born(_log):
    rows = _run_command(exp_utils.cmd_born, _log)
    return {"n_distinct": len(rows)}


@ex.command
def eigen(_log):
    rows = _run_command(exp_utils.cmd_eigen, _log)
    return {"energies": [r["energy"] for r in rows]}


@ex.automain
def pm(_log):
    rows = _run_command(exp_utils.cmd_pm, _log)
    return {k: rows[0][k] for k in ("pointer_shift", "reference_expectation",
                                    "shift_error", "fidelity", "survival")}
