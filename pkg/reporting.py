"""
Plain-text reports: slope tables, per-method error curves and real-data
metric tables, for the console and for report files next to the CSV/JSON.
"""
import logging
import os
from typing import Dict, List, Sequence, Tuple

from serialization import atomic_write_text

logger = logging.getLogger(__name__)

RULE = "=" * 70


def format_slope_table(fits, title: str = "Empirical vs. Theoretical Slopes") -> str:
    """One row per tail setting: fitted slope, theoretical slope and R^2."""
    lines = [RULE, title, RULE,
             f"{'tail index':>10}  {'method':<10} {'slope':>9} {'theory':>9} {'R^2':>7} {'points':>6}"]
    for fit in sorted(fits, key=lambda f: (f.method, f.tail_param)):
        theory = "-" if fit.theoretical is None else f"{fit.theoretical:9.3f}"
        lines.append(f"{fit.tail_param:>10.2f}  {fit.method:<10} {fit.slope:>9.3f} {theory:>9} "
                     f"{fit.r_squared:>7.3f} {len(fit.points):>6}")
    return "\n".join(lines) + "\n"


def format_curve_table(curves: Dict[Tuple[float, str], List[Tuple[int, float]]],
                       title: str = "Mean Estimation Error by Sample Size") -> str:
    """Methods as columns, sample sizes as rows, one block per tail setting."""
    lines = [RULE, title, RULE]
    for tail in sorted({tail for tail, _ in curves}):
        methods = [m for t, m in curves if t == tail]
        sizes = sorted({n for m in methods for n, _ in curves[(tail, m)]})
        lines.append(f"tail index {tail:g}")
        lines.append(f"{'n':>8}  " + " ".join(f"{m:>12}" for m in methods))
        for n in sizes:
            cells = []
            for m in methods:
                value = dict(curves[(tail, m)]).get(n)
                cells.append(f"{value:>12.4g}" if value is not None else f"{'-':>12}")
            lines.append(f"{n:>8}  " + " ".join(cells))
        lines.append("")
    return "\n".join(lines)


def format_metrics_table(rows: Sequence[Dict], title: str = "Held-out Prediction Metrics") -> str:
    """Rows of {'method', 'mape', 'mse'}, plus optional 'sd_mape', 'sd_mse' and 'failures'."""
    lines = [RULE, title, RULE, f"{'method':<12} {'MAPE':>10} {'MSE':>10}"]
    for row in rows:
        line = f"{row['method']:<12} {row['mape']:>10.4f} {row['mse']:>10.4f}"
        if "sd_mape" in row:
            line += f"   (sd {row['sd_mape']:.4f} / {row['sd_mse']:.4f})"
        if row.get("failures"):
            line += f"   [{row['failures']} failed]"
        lines.append(line)
    return "\n".join(lines) + "\n"


def format_diagnostics(diagnostics: Dict) -> str:
    """Heavy-tail diagnostics of a real dataset."""
    lines = [RULE, "Tail Diagnostics", RULE]
    kurt = diagnostics.get("feature_kurtosis")
    if kurt:
        lines.append(f"feature excess kurtosis: median {kurt['median']:.3g}, max {kurt['max']:.3g}, "
                     f"share above 3: {kurt['share_above_3']:.2f}")
    if "response_kurtosis" in diagnostics:
        lines.append(f"response excess kurtosis: {diagnostics['response_kurtosis']:.3g}")
    quantiles = diagnostics.get("residual_quantiles")
    if quantiles:
        lines.append("residual quantiles (right): " +
                     ", ".join(f"q{int(round(q * 100))}={v:.3g}" for q, v in quantiles.items()))
    return "\n".join(lines) + "\n"


def write_report(text: str, out_dir: str, name: str) -> str:
    """Save a report under out_dir and return its path."""
    path = os.path.join(out_dir, name)
    atomic_write_text(path, text)
    logger.info("[EXPERIMENT] report saved to: %s", path)
    return path


def experiment_report(result) -> str:
    """Full text report of an ExperimentResult."""
    spec = result.spec
    header = (f"{RULE}\nExperiment '{spec.name}' ({spec.kind.value}, {spec.model.value})\n"
              f"p={spec.p}, s*={spec.s_star}, trials={spec.trials}, seed={spec.seed}, "
              f"methods={', '.join(spec.methods)}\n")
    parts = [header]
    if result.fits:
        parts.append(format_slope_table(result.fits))
    parts.append(format_curve_table(result.curves))
    diverged = sum(1 for r in result.records if r.diverged)
    if diverged:
        parts.append(f"{diverged} fits diverged and were censored at {spec.censor_value:g}\n")
    return "\n".join(parts)
