"""CSV and manifest output.

All numeric output uses 17 significant digits so files round-trip bit-stably;
every file is written to a temporary sibling and atomically renamed, so a
failed run never leaves a partial artifact behind.
"""
from __future__ import annotations

import os
import tempfile

from .analysis import ConvergenceReport, MomentSeries
from .core import DistributionState


def fmt(x) -> str:
    return format(float(x), ".17g")


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def alpha_tag(alpha: float) -> str:
    return f"a{alpha:+.2f}"


def epsilon_tag(epsilon: float) -> str:
    return f"e{epsilon:.4f}"


def run_file_stem(model: str, alpha: float, epsilon: float) -> str:
    return f"{model}_{alpha_tag(alpha)}_{epsilon_tag(epsilon)}"


def moments_filename(model: str, alpha: float, epsilon: float) -> str:
    return f"{run_file_stem(model, alpha, epsilon)}_moments.csv"


def snapshot_filename(model: str, alpha: float, epsilon: float, time: float) -> str:
    return f"{run_file_stem(model, alpha, epsilon)}_snapshot_t{time:g}.csv"


def write_moments_csv(path, series: MomentSeries) -> None:
    lines = ["t,rho,p,E,mean,variance"]
    for i in range(len(series)):
        lines.append(",".join(fmt(col[i]) for col in
                              (series.times, series.rho, series.p,
                               series.E, series.mean, series.variance)))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_mean_series_csv(path, times, means: dict, errors: dict) -> None:
    """Seed-averaged moment series with standard-error columns."""
    names = list(means)
    header = "t," + ",".join(names) + "," + ",".join(f"se_{n}" for n in names)
    lines = [header]
    for i in range(len(times)):
        row = [fmt(times[i])]
        row += [fmt(means[n][i]) for n in names]
        row += [fmt(errors[n][i]) for n in names]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_snapshot_csv(path, state: DistributionState) -> None:
    lines = ["v,f_estimate"]
    nodes = state.grid.nodes
    for k in range(state.grid.n_points):
        lines.append(f"{fmt(nodes[k])},{fmt(state.values[k])}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_convergence_csv(path, report: ConvergenceReport) -> None:
    lines = ["epsilon,l2_final,rho_sup,p_sup,E_sup"]
    for i in range(len(report.epsilons)):
        lines.append(",".join(fmt(x) for x in
                              (report.epsilons[i], report.l2_final[i],
                               report.rho_sup[i], report.p_sup[i], report.E_sup[i])))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_orders_csv(path, report: ConvergenceReport) -> None:
    lines = ["metric,slope,fit_residual"]
    if report.fitted_orders:
        for name, (slope, resid) in report.fitted_orders.items():
            lines.append(f"{name},{fmt(slope)},{fmt(resid)}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_manifest(path, entries: dict) -> None:
    lines = [f"{key} = {value}" for key, value in entries.items()]
    _atomic_write(path, "\n".join(lines) + "\n")
