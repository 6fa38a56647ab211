#!/usr/bin/env python3
"""
Full-size convergence and reconstruction runs, one sacred run per task.
Execute with `jug execute experiments/jug/acceptance_runs.py` (as many times in
parallel as there are cores), then collect the results with
protective_pm.notebook_utils.collect_runs.
"""
import jug
import subprocess
import sys
from pathlib import Path

experiments_dir = Path(__file__).resolve().parent.parent
RING_LENGTH = 6.283185307179586


@jug.TaskGenerator
def protective_measurement(log_dir, command, **config):
    script = experiments_dir / "protective_measurement.py"
    args = [sys.executable, script, command, "with",
            f"log_dir={log_dir}", "progressbar=False",
            *[f"{k}={v}" for k, v in config.items()]]
    print("Running " + " ".join(map(str, args)))
    complete = subprocess.run(args, cwd=experiments_dir)
    if complete.returncode != 0:
        raise SystemError(f"Process returned with code {complete.returncode}")
    return log_dir


name = Path(__file__).name[:-3]
base_dir = experiments_dir.parent/"logs"/name
jug.set_jugdir(str(base_dir/"jugdir"))

# Identity observable: shift 1 for both schemes
for scheme in ["potential", "zeno"]:
    protective_measurement(base_dir, "pm", **{"observable.kind": "identity",
                                              "scheme.kind": scheme})

# <x^2> on the oscillator ground state, adiabatic protection, T doubling
for profile in ["raised_cosine", "smooth_bump"]:
    protective_measurement(base_dir, "sweep", **{
        "observable.kind": "position_squared", "time.profile": profile,
        "sweep.parameter": "T", "sweep.values": "[5,10,20,40]"})

# Zeno protection against the free kinetic energy, M doubling
protective_measurement(base_dir, "sweep", **{
    "observable.kind": "position_squared", "scheme.kind": "zeno",
    "scheme.zeno_free_evolution": "free",
    "sweep.parameter": "zeno_M", "sweep.values": "[8,16,32,64]"})

# Reconstructions at 64 cells, T = 40 and T = 80
for T in [40, 80]:
    steps = {"time.T": T, "time.n_steps": T*100}
    protective_measurement(base_dir, "reconstruct", **{"system.kind": "harmonic"}, **steps)
    protective_measurement(base_dir, "reconstruct", **{"system.kind": "box",
                                                       "system.length": 1}, **steps)
    protective_measurement(base_dir, "reconstruct", **{
        "system.kind": "ring", "system.length": RING_LENGTH,
        "system.flux": 0.02, "system.level": 5}, **steps)
    protective_measurement(base_dir, "reconstruct", **{
        "system.kind": "ring", "system.length": RING_LENGTH,
        "system.flux": 0.25, "system.modulation": 0.5}, **steps)

# Reconstruction fidelity against the number of cells
protective_measurement(base_dir, "sweep", **{"sweep.parameter": "cells",
                                             "sweep.values": "[8,16,32,64,128]"})

# Projective measurements of the same observables
protective_measurement(base_dir, "born", **{"observable.kind": "position_squared",
                                            "n_samples": 1000000, "seed": 1})
protective_measurement(base_dir, "born", **{
    "observable.kind": "cell_projector", "observable.cell_start": 0,
    "observable.cell_stop": 128, "n_samples": 1000000, "seed": 1})

# Spectra of the test systems
protective_measurement(base_dir, "eigen", **{"system.kind": "harmonic"})
protective_measurement(base_dir, "eigen", **{"system.kind": "box", "system.length": 1})
