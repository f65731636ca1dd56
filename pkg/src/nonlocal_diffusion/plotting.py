"""Figures written next to the CSV outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.dpi": 110,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_solution(t, x, u, path, title: str = "") -> None:
    """Space-time map of ``u`` and a few time slices."""
    with plt.rc_context(_STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
        mesh = ax0.pcolormesh(x, t, u, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax0, label="u")
        ax0.set_xlabel("x")
        ax0.set_ylabel("t")
        ax0.grid(False)
        picks = np.unique(np.linspace(0, len(t) - 1, 5).round().astype(int))
        for i in picks:
            ax1.plot(x, u[i], label=f"t = {t[i]:.3g}")
        ax1.set_xlabel("x")
        ax1.set_ylabel("u")
        ax1.legend(frameon=False)
        if title:
            fig.suptitle(title)
        _save(fig, path)


def plot_kernels(columns: dict, path) -> None:
    """Log-log view of ``k``, ``l``, the Yosida kernels and the Sonine product."""
    t = np.asarray(columns["t"])
    with plt.rc_context(_STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
        ax0.loglog(t, columns["k"], "k-", lw=1.5, label="k")
        ax0.loglog(t, columns["l"], "k--", lw=1, label="l")
        for name, vals in columns.items():
            if name.startswith("k_lambda_"):
                ax0.loglog(t, vals, lw=1, label=name.replace("k_lambda_", "k_lam, lam="))
        ax0.set_xlabel("t")
        ax0.legend(frameon=False)
        ax1.semilogx(t, np.asarray(columns["k_conv_l"]) - 1.0, ".-", ms=2)
        ax1.set_xlabel("t")
        ax1.set_ylabel("(k*l)(t) - 1")
        _save(fig, path)


def plot_report(report, path) -> None:
    """Residual against tolerance for every check; points above 0 failed."""
    checks = report.checks
    if not checks:
        return
    suites = sorted({c.suite for c in checks})
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(8, 3.6))
        for j, suite in enumerate(suites):
            sel = [c for c in checks if c.suite == suite]
            margin = [np.sign(c.residual - c.tolerance) * np.log10(1.0 + abs(c.residual - c.tolerance) / max(c.tolerance, 1e-300)) for c in sel]
            ax.scatter(np.full(len(sel), j) + np.linspace(-0.3, 0.3, len(sel)), margin, s=10,
                       c=["tab:red" if not c.passed else "tab:blue" for c in sel])
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xticks(range(len(suites)), suites)
        ax.set_ylabel("signed log10(1 + |res - tol| / tol)")
        ax.set_title("verification: " + ("pass" if report.passed else "FAIL"))
        _save(fig, path)


def plot_sweep(rows: list, path) -> None:
    """Pass/fail and worst step residual per sweep run."""
    if not rows:
        return
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(7, 3.2))
        idx = np.arange(len(rows))
        res = [max(r["max_step_residual"], 1e-300) for r in rows]
        ax.semilogy(idx, res, "o-", ms=4)
        for i, r in enumerate(rows):
            if not r["passed"]:
                ax.semilogy(i, res[i], "rx", ms=9)
        ax.set_xlabel("run")
        ax.set_ylabel("max step residual")
        _save(fig, path)
