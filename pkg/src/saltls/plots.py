"""Figure rendering for result tables.

Reads the delimited tables a run directory already holds and writes
png figures next to them (or to a separate directory).  Everything
here is downstream of the numeric pipeline: deleting this module
changes no computation.
"""

import glob
import math
import os
import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import read_sweep_csv, success_rates
from .nsi import ConvergenceTrace

DPI = 150


def plot_sweep_success(results, path):
    """Success fraction against sampling rate."""
    rates = success_rates(results)
    ps = [p for p, _ in rates]
    fracs = [f for _, f in rates]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(ps, fracs, "o-", color="tab:blue")
    ax.set_xlabel("sampling rate p")
    ax.set_ylabel("success fraction")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def plot_sweep_error(results, path):
    """Relative error scatter by rate, with the per-rate median."""
    ps = np.array([r.p for r in results])
    errs = np.array([max(r.frob_rel_err, 1e-18) for r in results])
    uniq = sorted(set(ps.tolist()))
    medians = [float(np.median(errs[ps == p])) for p in uniq]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.semilogy(ps, errs, ".", color="tab:gray", alpha=0.5, label="seeds")
    ax.semilogy(uniq, medians, "o-", color="tab:red", label="median")
    ax.set_xlabel("sampling rate p")
    ax.set_ylabel("relative Frobenius error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def plot_nsi_convergence(traces, path):
    """Largest-angle sine per step, one line per seed."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for label, trace in traces:
        steps = [r.step for r in trace.records]
        sins = [max(r.sin, 1e-18) for r in trace.records]
        ax.semilogy(steps, sins, "-", alpha=0.7, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("sin of largest angle")
    ax.grid(True, which="both", alpha=0.3)
    if len(traces) <= 8:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_report(results_dir, out_dir):
    """Render every figure the tables under ``results_dir`` support.

    Returns the list of figure paths written; an empty list means no
    recognized table was found.
    """
    written = []
    sweep_path = os.path.join(results_dir, "sweep.csv")
    if os.path.isfile(sweep_path):
        results = read_sweep_csv(sweep_path)
        out = os.path.join(out_dir, "sweep_success.png")
        plot_sweep_success(results, out)
        written.append(out)
        out = os.path.join(out_dir, "sweep_error.png")
        plot_sweep_error(results, out)
        written.append(out)
    trace_paths = sorted(
        glob.glob(os.path.join(results_dir, "trace_*.csv")),
        key=lambda p: _trace_sort_key(os.path.basename(p)),
    )
    if trace_paths:
        traces = []
        for tp in trace_paths:
            name = os.path.splitext(os.path.basename(tp))[0]
            traces.append((name.replace("trace_", "seed "), ConvergenceTrace.read_csv(tp)))
        out = os.path.join(out_dir, "nsi_convergence.png")
        plot_nsi_convergence(traces, out)
        written.append(out)
    return written


def _trace_sort_key(name):
    m = re.match(r"trace_(\d+)\.csv$", name)
    return (0, int(m.group(1))) if m else (1, math.inf)
