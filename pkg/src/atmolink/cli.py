"""Command line entry points.

Four workflows: ``simulate-pdt`` writes samples, density, and a moment
summary; ``fit`` recovers channel parameters from a measured trace;
``squeezing`` evaluates transmitted squeezing against the postselection
threshold; ``entanglement`` maps the Simon entanglement test over a
squeezing/displacement grid.  All of them are deterministic in the
(config, seed) pair, including the rendered figures.

Exit codes: 0 success, 2 configuration error, 3 data-ingestion error,
4 numerical or statistics error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .channel import assemble_statistics
from .config import RunConfig, load_config
from .errors import AtmolinkError, ConfigError, IngestError
from .channel import statistics_from_fit_params
from .fitting import Histogram, fit_channel
from .io import FLOAT_FORMAT, config_hash, ingest_measured_trace, provenance_line, write_csv
from .pdt import TransmittanceEnsemble, estimate_density, sample_ensemble, silverman_bandwidth
from .quantum import channel_moments, entanglement_region, squeezing_vs_threshold

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_NUMERICAL = 4


def _prepare(args) -> tuple[RunConfig, Path, str]:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    provenance = provenance_line(config_hash(config.resolved_dict()), config.sampling.seed)
    return config, out_dir, provenance


def _build_ensemble(config: RunConfig):
    stats = assemble_statistics(config.geometry, config.turbulence, config.scattering, config.extinction)
    ensemble = sample_ensemble(
        stats,
        config.geometry,
        config.sampling.n,
        config.sampling.seed,
        workers=config.sampling.workers,
    )
    return stats, ensemble


def _moment_summary(samples: np.ndarray, density) -> list[tuple[str, float]]:
    mean = float(np.mean(samples))
    std = float(np.std(samples))
    skew = float(np.mean((samples - mean) ** 3) / std**3) if std > 0 else 0.0
    return [
        ("n", float(samples.size)),
        ("mean_eta", mean),
        ("mean_eta_stderr", std / np.sqrt(samples.size)),
        ("mean_sqrt_eta", float(np.mean(np.sqrt(samples)))),
        ("variance", std * std),
        ("skewness", skew),
        ("min", float(samples.min())),
        ("max", float(samples.max())),
        ("kde_bandwidth", density.bandwidth),
        ("kde_integral", density.integral),
        ("degenerate", 1.0 if density.degenerate else 0.0),
    ]


def _write_summary(path, pairs: list[tuple[str, float]], provenance: str) -> None:
    lines = [provenance, "quantity,value"]
    for name, value in pairs:
        lines.append(f"{name},{FLOAT_FORMAT.format(float(value))}")
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_simulate_pdt(args) -> int:
    config, out_dir, provenance = _prepare(args)
    _, ensemble = _build_ensemble(config)
    density = estimate_density(ensemble, config.sampling.grid_size, config.sampling.bandwidth)

    write_csv(
        out_dir / "samples.csv",
        ["index", "transmittance"],
        [np.arange(ensemble.n), ensemble.samples],
        provenance,
    )
    write_csv(out_dir / "density.csv", ["eta", "density"], [density.grid, density.density], provenance)
    _write_summary(out_dir / "summary.csv", _moment_summary(ensemble.samples, density), provenance)
    if not args.no_plots:
        plotting.save_density_figure(out_dir / "pdt.png", density.grid, density.density)
    if density.degenerate:
        print("summary: degenerate distribution (zero sample variance)", file=sys.stderr)
    print(f"simulate-pdt: wrote {out_dir}/samples.csv, density.csv, summary.csv")
    return EXIT_OK


def cmd_fit(args) -> int:
    config, out_dir, provenance = _prepare(args)
    values, rejected = ingest_measured_trace(args.measured)
    if rejected:
        shown = ", ".join(str(r) for r in rejected[:10])
        more = "" if len(rejected) <= 10 else f" (+{len(rejected) - 10} more)"
        print(
            f"fit: rejected {len(rejected)} of {len(values) + len(rejected)} rows "
            f"(lines {shown}{more})",
            file=sys.stderr,
        )
    measured = Histogram.from_samples(values, n_bins=config.fit.n_bins)
    result = fit_channel(
        measured,
        config.geometry,
        config.fit.bounds,
        config.fit.budget,
        config.sampling.seed,
        mc_samples=config.fit.mc_samples,
    )

    write_csv(
        out_dir / "fit_result.csv",
        ["rytov_sq", "xi_divergence", "chi_ext", "chi2_statistic", "dof", "n_eval", "n_rows", "n_rejected"],
        [
            np.array([result.rytov_sq]),
            np.array([result.xi_divergence]),
            np.array([result.chi_ext]),
            np.array([result.chi2_statistic]),
            np.array([result.dof]),
            np.array([result.n_eval]),
            np.array([len(values)]),
            np.array([len(rejected)]),
        ],
        provenance,
    )

    # overlay of measured and fitted densities on a shared grid
    fitted_stats = statistics_from_fit_params(
        config.geometry, result.rytov_sq, result.xi_divergence, result.chi_ext
    )
    fitted_ensemble = sample_ensemble(
        fitted_stats, config.geometry, config.sampling.n, config.sampling.seed, workers=config.sampling.workers
    )
    grid = np.linspace(0.0, 1.0, config.sampling.grid_size)
    bandwidth = config.sampling.bandwidth or silverman_bandwidth(values)
    measured_density = estimate_density(
        TransmittanceEnsemble(samples=values, seed=config.sampling.seed),
        config.sampling.grid_size,
        bandwidth,
    )
    fitted_density = estimate_density(fitted_ensemble, config.sampling.grid_size, bandwidth)
    write_csv(
        out_dir / "overlay.csv",
        ["eta", "measured_density", "fitted_density"],
        [grid, measured_density.density, fitted_density.density],
        provenance,
    )
    if not args.no_plots:
        plotting.save_overlay_figure(
            out_dir / "fit.png", grid, measured_density.density, fitted_density.density
        )
    print(
        f"fit: rytov_sq={result.rytov_sq:.4g} xi_divergence={result.xi_divergence:.4g} "
        f"chi_ext={result.chi_ext:.4g} chi2={result.chi2_statistic:.4g} dof={result.dof} "
        f"n_eval={result.n_eval}"
    )
    return EXIT_OK


def cmd_squeezing(args) -> int:
    config, out_dir, provenance = _prepare(args)
    _, ensemble = _build_ensemble(config)
    curve = squeezing_vs_threshold(
        config.quantum.input_db,
        ensemble,
        config.quantum.thresholds,
        config.quantum.deterministic_factor,
    )
    write_csv(
        out_dir / "squeezing.csv",
        ["eta_min", "output_db", "fraction_kept"],
        [
            np.array([p.eta_min for p in curve.points]),
            np.array([p.output_db for p in curve.points]),
            np.array([p.fraction_kept for p in curve.points]),
        ],
        provenance,
    )
    if curve.truncated_thresholds:
        print(
            f"squeezing: {len(curve.truncated_thresholds)} threshold(s) beyond the largest sample "
            f"were skipped (empty postselection)",
            file=sys.stderr,
        )
    if not args.no_plots:
        plotting.save_squeezing_figure(
            out_dir / "squeezing.png",
            [p.eta_min for p in curve.points],
            [p.output_db for p in curve.points],
            input_db=config.quantum.input_db,
        )
    print(f"squeezing: wrote {out_dir}/squeezing.csv ({len(curve.points)} thresholds)")
    return EXIT_OK


def cmd_entanglement(args) -> int:
    config, out_dir, provenance = _prepare(args)
    _, ensemble = _build_ensemble(config)
    moments = channel_moments(ensemble, config.quantum.eta_min, config.quantum.deterministic_factor)
    region = entanglement_region(moments, config.quantum.xi_grid, config.quantum.displacement_grid)

    xi_mesh, disp_mesh = np.meshgrid(region.xi_grid, region.displacement_grid, indexing="ij")
    write_csv(
        out_dir / "wgrid.csv",
        ["xi", "displacement", "w_value"],
        [xi_mesh.ravel(), disp_mesh.ravel(), region.w_values.ravel()],
        provenance,
    )
    write_csv(
        out_dir / "contour.csv",
        ["xi", "displacement"],
        [
            np.array([p[0] for p in region.boundary]),
            np.array([p[1] for p in region.boundary]),
        ],
        provenance,
    )
    if not args.no_plots:
        plotting.save_region_figure(
            out_dir / "entanglement.png",
            region.xi_grid,
            region.displacement_grid,
            region.w_values,
            region.boundary,
        )
    print(
        f"entanglement: wrote {out_dir}/wgrid.csv ({region.w_values.size} points), "
        f"contour.csv ({len(region.boundary)} vertices)"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atmolink",
        description="Simulate and fit fluctuating-loss free-space optical quantum channels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out-dir", default=".", help="output directory (created if absent)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = sub.add_parser("simulate-pdt", help="sample the transmittance distribution and its density")
    add_common(p)
    p.set_defaults(func=cmd_simulate_pdt)

    p = sub.add_parser("fit", help="fit channel parameters to a measured trace")
    add_common(p)
    p.add_argument("--measured", required=True, help="measured trace CSV with a 'transmittance' column")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("squeezing", help="transmitted squeezing versus postselection threshold")
    add_common(p)
    p.set_defaults(func=cmd_squeezing)

    p = sub.add_parser("entanglement", help="Simon entanglement test over a squeezing/displacement grid")
    add_common(p)
    p.set_defaults(func=cmd_entanglement)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestError as exc:
        print(f"error: ingest: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except AtmolinkError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
