"""Reproduction bundles for the reference experiments, emitted as CSV data.

Figure ids:
    1d-compare-a    pulse comparison at eps = 0.05, t = 400
    1d-compare-b    pulse comparison at eps = 0.1, t = 200
    1d-convergence  L2(u - w) at t = 1/eps^2 for eps in {0.2, 0.1, 0.05}
    2d-field        heterogeneous strip solution at eps = 0.1, t = 100
    2d-profile      x2-profile of the strip solution at the pulse peak
    2d-compare      x2-mean of the strip solution against the effective pulse
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .. import effective_fdm, hetero_fdm
from ..core_types import (InitialDatum, PeriodicMedium, SimulationConfig,
                          divisor_time_step, make_cosine_medium_1d,
                          make_gaussian_datum, make_smoothed_square_medium_2d)
from ..dispersion import DispersionCoefficients, decompose, fit_dispersion
from . import metrics, snapshots

FIGURE_IDS = ("1d-compare-a", "1d-compare-b", "1d-convergence",
              "2d-field", "2d-profile", "2d-compare")


def reference_medium_1d() -> PeriodicMedium:
    return make_cosine_medium_1d(1.5, 1.4)


def reference_datum_1d() -> InitialDatum:
    return make_gaussian_datum(0.4, 1)


def reference_medium_2d() -> PeriodicMedium:
    return make_smoothed_square_medium_2d()


def reference_datum_2d() -> InitialDatum:
    return make_gaussian_datum(0.6, 2, (True, False))


def strip_config(epsilon: float, final_time: float, datum: InitialDatum,
                 max_coefficient: float, output_every: int = 0) -> SimulationConfig:
    """Long strip, zero-exterior in x1, exactly one period wide in x2."""
    dx = 2.0 * np.pi * epsilon / metrics.HETERO_POINTS_PER_PERIOD
    speed = math.sqrt(max_coefficient)
    inv = 2.0 / dx**2
    bound = hetero_fdm.CFL_SAFETY / math.sqrt(max_coefficient * inv)
    dt = divisor_time_step(metrics.HETERO_DT_2D, bound, final_time)
    half_width = datum.truncation_radius + speed * final_time + 4.0 * dx
    return SimulationConfig(epsilon=epsilon, final_time=final_time,
                            half_widths=(half_width, np.pi * epsilon),
                            dx=(dx, dx), dt=dt, boundary=("zero", "periodic"),
                            datum=datum, output_every=output_every)


def _coeffs_1d(coeffs: DispersionCoefficients | None) -> DispersionCoefficients:
    return coeffs if coeffs is not None else fit_dispersion(reference_medium_1d())


def _coeffs_2d(coeffs: DispersionCoefficients | None) -> DispersionCoefficients:
    return coeffs if coeffs is not None else fit_dispersion(reference_medium_2d())


def _compare_1d(outdir: Path, epsilon: float, final_time: float,
                coeffs: DispersionCoefficients | None) -> list[Path]:
    medium = reference_medium_1d()
    datum = reference_datum_1d()
    tensors = decompose(_coeffs_1d(coeffs))
    report, res_h, res_e = metrics.paired_run_1d(medium, tensors, datum,
                                                 epsilon, final_time)
    written = snapshots.write_run(outdir / "hetero", res_h)
    written += snapshots.write_run(outdir / "effective", res_e)
    u = res_h.final()
    w = metrics.interpolate_onto(res_e.final(), u)
    path = outdir / "comparison.csv"
    snapshots.write_table(path, ["x", "u_eps", "w_eps"],
                          [[x, a, b] for x, a, b in
                           zip(u.axis(0), u.values, w.values)])
    (outdir / "report.json").write_text(json.dumps({
        "epsilon": epsilon, "time": final_time, "l2": report.l2,
        "linf": report.linf, "surrogate": report.surrogate}, indent=2) + "\n")
    return written + [path, outdir / "report.json"]


def _convergence_1d(outdir: Path, eps_list: list[float],
                    coeffs: DispersionCoefficients | None) -> list[Path]:
    medium = reference_medium_1d()
    datum = reference_datum_1d()
    table = metrics.convergence_study(medium, datum, eps_list,
                                      coeffs=_coeffs_1d(coeffs))
    path = outdir / "convergence.csv"
    snapshots.write_table(path, ["epsilon", "time", "l2_error"],
                          [[r.epsilon, r.time, r.error] for r in table.rows])
    (outdir / "slope.json").write_text(
        json.dumps({"slope": table.slope()}, indent=2) + "\n")
    return [path, outdir / "slope.json"]


def _strip_run(epsilon: float, final_time: float) -> hetero_fdm.RunResult:
    medium = reference_medium_2d()
    datum = reference_datum_2d()
    cfg = strip_config(epsilon, final_time, datum,
                       metrics.max_coefficient(medium))
    return hetero_fdm.run(cfg, medium)


def _field_2d(outdir: Path, epsilon: float, final_time: float) -> list[Path]:
    result = _strip_run(epsilon, final_time)
    return snapshots.write_run(outdir, result, tag="u_eps")


def _profile_2d(outdir: Path, epsilon: float, final_time: float) -> list[Path]:
    result = _strip_run(epsilon, final_time)
    u = result.final()
    peak = int(np.argmax(np.max(np.abs(u.values), axis=1)))
    path = outdir / "x2_profile.csv"
    snapshots.write_table(path, ["x2", "value"],
                          [[x2, v] for x2, v in zip(u.axis(1), u.values[peak])])
    (outdir / "peak.json").write_text(json.dumps(
        {"x1_peak": float(u.axis(0)[peak]), "epsilon": epsilon,
         "time": final_time}, indent=2) + "\n")
    return [path, outdir / "peak.json"]


def _compare_2d(outdir: Path, epsilon: float, final_time: float,
                coeffs: DispersionCoefficients | None) -> list[Path]:
    result = _strip_run(epsilon, final_time)
    mean = metrics.x2_mean(result.final())
    tensors = decompose(_coeffs_2d(coeffs))
    cfg_e = SimulationConfig(
        epsilon=epsilon, final_time=final_time,
        half_widths=(result.final().axis(0)[-1], np.pi * epsilon),
        dx=(metrics.EFFECTIVE_DX, 2.0 * np.pi * epsilon / 8.0),
        dt=divisor_time_step(metrics.EFFECTIVE_DT_2D, metrics.EFFECTIVE_DT_2D,
                             final_time),
        boundary=("zero", "periodic"), datum=reference_datum_2d())
    res_e = effective_fdm.run(cfg_e, tensors)  # strip-reduces to 1D in x1
    w = metrics.interpolate_onto(res_e.final(), mean)
    path = outdir / "compare_2d.csv"
    snapshots.write_table(path, ["x1", "u_mean", "w_eps"],
                          [[x, a, b] for x, a, b in
                           zip(mean.axis(0), mean.values, w.values)])
    gap = float(np.max(np.abs(mean.values - w.values)))
    peak = float(np.max(np.abs(mean.values)))
    (outdir / "report.json").write_text(json.dumps(
        {"epsilon": epsilon, "time": final_time, "max_gap": gap,
         "peak_amplitude": peak, "relative_gap": gap / peak}, indent=2) + "\n")
    return [path, outdir / "report.json"]


def reproduce(figure_id: str, outdir: str | Path,
              eps_list: list[float] | None = None,
              coeffs: DispersionCoefficients | None = None) -> list[Path]:
    """Emit the CSV data behind one reference figure into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if figure_id == "1d-compare-a":
        return _compare_1d(outdir, 0.05, 400.0, coeffs)
    if figure_id == "1d-compare-b":
        return _compare_1d(outdir, 0.1, 200.0, coeffs)
    if figure_id == "1d-convergence":
        return _convergence_1d(outdir, eps_list or [0.2, 0.1, 0.05], coeffs)
    if figure_id == "2d-field":
        return _field_2d(outdir, 0.1, 100.0)
    if figure_id == "2d-profile":
        return _profile_2d(outdir, 0.1, 100.0)
    if figure_id == "2d-compare":
        return _compare_2d(outdir, 0.1, 100.0, coeffs)
    raise ValueError(f"unknown figure id {figure_id!r}; known: {', '.join(FIGURE_IDS)}")
