import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


__all__ = ('plot_pointer_trace', 'plot_sweep', 'plot_reconstruction')


def plot_pointer_trace(result, ax=None):
    """<X>(t) of a protective measurement against the ideal cumulative shift
    <A> int_0^t g. Returns the figure."""
    if ax is None:
        fig, ax = plt.subplots(figsize=(5, 3.5))
    else:
        fig = ax.figure
    t = result.times
    ax.plot(t, result.pointer_trace - result.pointer_trace[0], label="pointer shift")
    ax.axhline(result.reference_expectation, color="k", ls="--", lw=0.8,
               label=r"$\langle A\rangle$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\langle X\rangle(t) - \langle X\rangle(0)$")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return fig


def plot_sweep(rows: pd.DataFrame, y: str = "shift_error", ax=None):
    "Convergence of `y` over the swept parameter, log-log"
    if ax is None:
        fig, ax = plt.subplots(figsize=(5, 3.5))
    else:
        fig = ax.figure
    ax.loglog(rows["sweep_value"], rows[y], "o-")
    ax.set_xlabel(str(rows["sweep_param"].iloc[0]))
    ax.set_ylabel(y)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return fig


def plot_reconstruction(report, truth=None, partition=None):
    """Measured cell densities and currents, and the reconstructed |psi|^2 and
    phase against the truth when given"""
    fig, (ax_rho, ax_phase) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    psi = report.psi_reconstructed
    x = psi.grid.x
    if partition is not None:
        ax_rho.plot(partition.centers, report.rho_cells, "o", ms=3, label="measured cells")
    ax_rho.plot(x, np.abs(psi.amplitudes)**2, label="reconstructed")
    if truth is not None:
        ax_rho.plot(x, np.abs(truth.amplitudes)**2, "k--", lw=0.8, label="true")
        # align the global phase before comparing
        overlap = np.vdot(truth.amplitudes, psi.amplitudes)
        aligned = psi.amplitudes * np.conj(overlap) / max(abs(overlap), 1e-300)
        ax_phase.plot(x, np.unwrap(np.angle(truth.amplitudes)), "k--", lw=0.8, label="true")
        ax_phase.plot(x, np.unwrap(np.angle(aligned)), label="reconstructed")
    else:
        ax_phase.plot(x, np.unwrap(np.angle(psi.amplitudes)), label="reconstructed")
    ax_rho.set_ylabel(r"$\rho$")
    ax_phase.set_ylabel(r"phase")
    ax_phase.set_xlabel("x")
    title = None if report.fidelity_to_truth is None else f"fidelity {report.fidelity_to_truth:.5f}"
    ax_rho.set_title(title)
    ax_rho.legend()
    fig.tight_layout()
    return fig
