"""Command-line entry points.

Subcommands: ``simulate`` (generate a shot stream from a config file),
``analyze`` (run the signal extraction on a stored stream), ``rabi`` (the
four-way amplitude-calibration comparison), ``rb`` (benchmarking decay plus
bootstrap), ``bench`` (runtime scaling).  Every run writes a ``manifest.json``
recording the command, config, seed and produced files; rerunning with the
same manifest inputs reproduces the outputs byte for byte.  Every figure gets
a CSV twin with the same numbers.

Exit codes: 0 success, 2 configuration or usage errors, 3 degenerate or
unusable data.  The environment variable ``RESTLESS_SEED`` overrides the
configured seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .axis import AxisRecoveryError
from .bench import DEFAULT_SIZES, DEFAULT_SVD_SIZES, run_scaling
from .core import (
    GATE_RABI,
    InsufficientDataError,
    MODE_RESTLESS,
    MODE_STANDARD,
    SequenceMeta,
    StreamValidationError,
)
from .discriminate import METHOD_CDF_GAP, METHOD_QUANTILE
from .fitting import (
    bootstrap_epc,
    fit_rabi,
    fit_rb,
    rb_curves_from_labels,
    rb_postselect,
    z_test,
)
from .io import read_stream, write_stream
from .pipeline import analyze_restless, standard_signal
from .signals import (
    calibration_values,
    dprime_signal,
    normalize_signal,
    readout_fidelities,
    spam_correct,
)
from .simulator import (
    SimConfig,
    load_config_file,
    rb_sequence_meta,
    simulate_rb_curves,
    simulate_restless,
    simulate_standard,
)
from .svgplot import Series, render_plot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

_DATA_ERRORS = (InsufficientDataError, AxisRecoveryError, StreamValidationError)


def _package_version() -> str:
    from . import __version__

    return __version__


def _env_seed():
    raw = os.environ.get("RESTLESS_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"RESTLESS_SEED must be an integer, got {raw!r}") from None


def _resolve_seed(cfg_seed: int, arg_seed) -> int:
    env = _env_seed()
    if env is not None:
        return env
    if arg_seed is not None:
        return arg_seed
    return cfg_seed


def _amplitude_list(spec) -> list:
    if isinstance(spec, dict):
        return list(np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["count"])))
    return [float(a) for a in spec]


def build_experiment(exp: dict) -> tuple[SequenceMeta, str, int]:
    """Turn the ``experiment`` config section into cycle metadata."""
    kind = exp.get("kind")
    mode = exp.get("mode", MODE_RESTLESS)
    if mode not in (MODE_RESTLESS, MODE_STANDARD):
        raise ValueError(f"unknown mode {mode!r}")
    if "num_repetitions" not in exp:
        raise ValueError("experiment config needs num_repetitions")
    n_rep = int(exp["num_repetitions"])
    if kind == "id_x":
        meta = SequenceMeta.id_x_blocks(
            int(exp.get("n_id", 10)), int(exp.get("n_x", 10)), float(exp.get("eta_x", 0.99))
        )
    elif kind == "rabi":
        meta = SequenceMeta.rabi_sweep(
            _amplitude_list(exp["amplitudes"]),
            float(exp["rad_per_unit"]),
            n_cal_id=int(exp.get("n_cal_id", 3)),
            n_cal_x=int(exp.get("n_cal_x", 3)),
            eta_x=float(exp.get("eta_x", 1.0)),
        )
    elif kind == "rb":
        meta = rb_sequence_meta(
            [int(n) for n in exp["lengths"]],
            int(exp["n_sequences"]),
            float(exp["epc"]),
            seed=int(exp.get("sequence_seed", 0)),
            decay_spread=float(exp.get("decay_spread", 0.0)),
        )
    else:
        raise ValueError(f"unknown experiment kind {kind!r}")
    return meta, mode, n_rep


def _write_manifest(outdir: Path, command: str, config: dict, seed, outputs: list) -> None:
    manifest = {
        "command": command,
        "version": _package_version(),
        "seed": seed,
        "config": config,
        "outputs": sorted(str(p) for p in outputs),
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_csv(path, header, columns) -> None:
    columns = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            cells = []
            for v in row:
                if isinstance(v, (str, np.str_)):
                    cells.append(str(v))
                elif isinstance(v, (int, np.integer)):
                    cells.append(str(int(v)))
                else:
                    cells.append(f"{float(v):.12g}")
            fh.write(",".join(cells) + "\n")


def _write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _series_csv(path, series, extra_name=None, extra=None) -> None:
    k = np.arange(1, len(series) + 1)
    header = ["k", "value", "count", "stderr"]
    cols = [k, series.values, series.counts, series.stderr]
    if extra is not None:
        header.insert(1, extra_name)
        cols.insert(1, extra)
    _write_csv(path, header, cols)


# -- simulate -------------------------------------------------------------------


def cmd_simulate(args) -> int:
    config = load_config_file(args.config)
    sim = SimConfig.from_dict(config.get("sim", {}))
    seed = _resolve_seed(sim.seed, args.seed)
    sim = dataclasses.replace(sim, seed=seed)
    meta, mode, n_rep = build_experiment(config.get("experiment", {}))
    runner = simulate_restless if mode == MODE_RESTLESS else simulate_standard
    stream, truth = runner(sim, meta, n_rep)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    fname = "stream.csv" if args.format == "csv" else "stream.bin"
    path = outdir / fname
    write_stream(stream, path, fmt=args.format, states=truth.states if args.truth else None)
    _write_manifest(outdir, "simulate", config, seed, [fname])
    print(
        f"wrote {len(stream)} {mode} shots "
        f"(K={stream.num_sequences}, N_s={stream.num_repetitions}, seed={seed}) to {path}"
    )
    return EXIT_OK


# -- analyze --------------------------------------------------------------------


def _load_meta(args, stream) -> SequenceMeta | None:
    if not args.config:
        return None
    config = load_config_file(args.config)
    meta, _, _ = build_experiment(config.get("experiment", {}))
    if len(meta) != stream.num_sequences:
        raise ValueError(
            f"config describes {len(meta)} sequences but the stream has {stream.num_sequences}"
        )
    return meta


def _analyze_standard(args, stream, meta, outdir: Path, outputs: list) -> None:
    if args.dprime:
        print(
            "warning: outcome-difference analysis needs reset-free data; "
            "falling back to standard averaging",
            file=sys.stderr,
        )
    axis, series = standard_signal(stream)
    _series_csv(outdir / "signal.csv", series)
    outputs.append("signal.csv")
    plotted = series
    if meta is not None:
        cal_id, cal_x = calibration_values(series, meta)
        normalized = normalize_signal(series, cal_id, cal_x)
        _series_csv(outdir / "normalized.csv", normalized)
        outputs.append("normalized.csv")
        plotted = normalized
    k = np.arange(1, len(plotted) + 1)
    render_plot(
        outdir / "signal.svg",
        [Series(x=k, y=plotted.values, yerr=plotted.stderr, label="standard", markers=True)],
        title="averaged signal",
        xlabel="sequence slot k",
        ylabel="signal",
    )
    outputs.append("signal.svg")
    print(f"standard analysis: K={stream.num_sequences}, axis angle {axis.theta:.4f} rad")


def _analyze_restless(args, stream, meta, outdir: Path, outputs: list) -> None:
    result = analyze_restless(stream, method=args.method, meta=meta)
    _series_csv(outdir / "signal.csv", result.signal)
    _series_csv(outdir / "conditioned_a.csv", result.signal_a)
    _series_csv(outdir / "conditioned_b.csv", result.signal_b)
    _series_csv(outdir / "recombined.csv", result.recombined)
    sel = result.selection
    _write_csv(
        outdir / "selection.csv",
        ["k", "count_a", "count_b", "weight_a", "weight_b"],
        [
            np.arange(1, len(sel.counts_a) + 1),
            sel.counts_a,
            sel.counts_b,
            sel.weights_a,
            sel.weights_b,
        ],
    )
    (outdir / "discriminator.json").write_text(result.discriminator.to_json() + "\n")
    _write_json(outdir / "diagnostics.json", result.diagnostics.to_dict())
    outputs.extend(
        [
            "signal.csv",
            "conditioned_a.csv",
            "conditioned_b.csv",
            "recombined.csv",
            "selection.csv",
            "discriminator.json",
            "diagnostics.json",
        ]
    )

    k = np.arange(1, len(result.signal) + 1)
    render_plot(
        outdir / "signal.svg",
        [
            Series(x=k, y=result.signal.values, yerr=result.signal.stderr, label="signal", markers=True),
            Series(
                x=k,
                y=result.recombined.values,
                yerr=result.recombined.stderr,
                label="recombined",
                line=False,
                markers=True,
            ),
        ],
        title="state-change signal",
        xlabel="sequence slot k",
        ylabel="indicator mean",
    )
    outputs.append("signal.svg")

    rng = np.random.default_rng(12345)
    n_plot = min(len(stream), 2000)
    idx = np.sort(rng.choice(len(stream), size=n_plot, replace=False))
    iq = stream.iq[idx]
    labels = result.labeled.labels[idx]
    _write_csv(
        outdir / "iq_points.csv",
        ["j", "I", "Q", "label"],
        [idx + 1, iq.real, iq.imag, labels],
    )
    render_plot(
        outdir / "iq.svg",
        [
            Series(x=iq.real[labels == 0], y=iq.imag[labels == 0], label="A", line=False),
            Series(x=iq.real[labels == 1], y=iq.imag[labels == 1], label="B", line=False),
        ],
        title="IQ plane",
        xlabel="I",
        ylabel="Q",
    )
    outputs.extend(["iq_points.csv", "iq.svg"])

    if args.spam or args.spam_correct:
        if meta is None:
            raise ValueError("--spam needs an experiment config for the gate tags")
        report = readout_fidelities(result.labeled, meta)
        _write_json(outdir / "fidelity.json", report.to_dict())
        outputs.append("fidelity.json")
        print(
            f"readout fidelity: F_A={report.fidelity_a.value:.4f} "
            f"F_B={report.fidelity_b.value:.4f} (ground label {report.ground_label})"
        )
        if args.spam_correct:
            corr_a = spam_correct(result.signal_a, report, "A")
            corr_b = spam_correct(result.signal_b, report, "B")
            _series_csv(outdir / "spam_corrected_a.csv", corr_a)
            _series_csv(outdir / "spam_corrected_b.csv", corr_b)
            outputs.extend(["spam_corrected_a.csv", "spam_corrected_b.csv"])

    if args.dprime:
        if meta is None:
            raise ValueError("--dprime needs an experiment config for the calibration tags")
        dser = dprime_signal(stream, meta=meta)
        _series_csv(outdir / "dprime.csv", dser)
        render_plot(
            outdir / "dprime.svg",
            [Series(x=k, y=dser.values, yerr=dser.stderr, label="separation signal", markers=True)],
            title="calibration-free signal",
            xlabel="sequence slot k",
            ylabel="normalised separation",
        )
        outputs.extend(["dprime.csv", "dprime.svg"])

    diag = result.diagnostics
    print(
        f"restless analysis: K={stream.num_sequences}, axis angle {result.axis.theta:.4f} rad, "
        f"branch {diag.chosen}, threshold {result.discriminator.threshold:.4f}"
    )


def cmd_analyze(args) -> int:
    stream, _ = read_stream(args.stream)
    meta = _load_meta(args, stream)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs: list = []
    if stream.mode == MODE_STANDARD:
        _analyze_standard(args, stream, meta, outdir, outputs)
    else:
        _analyze_restless(args, stream, meta, outdir, outputs)
    config_echo = {"stream": str(args.stream), "config": str(args.config) if args.config else None}
    _write_manifest(outdir, "analyze", config_echo, None, outputs + ["manifest.json"])
    return EXIT_OK


# -- rabi -----------------------------------------------------------------------


def _normalized_pathway(series, meta):
    cal_id, cal_x = calibration_values(series, meta)
    return normalize_signal(series, cal_id, cal_x)


def cmd_rabi(args) -> int:
    config = load_config_file(args.config)
    sim = SimConfig.from_dict(config.get("sim", {}))
    seed = _resolve_seed(sim.seed, args.seed)
    sim = dataclasses.replace(sim, seed=seed)
    exp = dict(config.get("experiment", {}))
    exp.setdefault("kind", "rabi")
    if exp["kind"] != "rabi":
        raise ValueError("rabi command needs an experiment of kind 'rabi'")
    meta, _, n_rep = build_experiment(exp)
    amp_mask = meta.mask(GATE_RABI)
    amplitudes = np.array([g.amplitude for g in meta.gates if g.name == GATE_RABI])

    stream, _ = simulate_restless(sim, meta, n_rep)
    std_stream, _ = simulate_standard(dataclasses.replace(sim, seed=seed + 1), meta, n_rep)

    result = analyze_restless(stream, meta=meta)
    pathways = {
        "restless": _normalized_pathway(result.signal, meta),
        "conditioned_a": _normalized_pathway(result.signal_a, meta),
        "conditioned_b": _normalized_pathway(result.signal_b, meta),
    }
    _, std_series = standard_signal(std_stream)
    pathways["standard"] = _normalized_pathway(std_series, meta)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs: list = []

    fits = {}
    for name, series in pathways.items():
        fits[name] = fit_rabi(
            amplitudes, series.values[amp_mask], stderr=series.stderr[amp_mask]
        )
    rates = {
        name: {
            "rate": fit.param("angular_frequency"),
            "stderr": fit.param_stderr("angular_frequency"),
            "converged": fit.converged,
            "warnings": list(fit.warnings),
        }
        for name, fit in fits.items()
    }
    pairs = {}
    names = list(fits)
    for a_idx in range(len(names)):
        for b_idx in range(a_idx + 1, len(names)):
            na, nb = names[a_idx], names[b_idx]
            zt = z_test(
                rates[na]["rate"], rates[na]["stderr"], rates[nb]["rate"], rates[nb]["stderr"]
            )
            pairs[f"{na}:{nb}"] = {"z": zt.z, "confidence": zt.confidence}
    _write_json(outdir / "rates.json", {"rates": rates, "pairwise": pairs})
    outputs.append("rates.json")

    header = ["amplitude"]
    cols = [amplitudes]
    plot_series = []
    for name, series in pathways.items():
        header += [f"{name}", f"{name}_stderr"]
        cols += [series.values[amp_mask], series.stderr[amp_mask]]
        plot_series.append(
            Series(x=amplitudes, y=series.values[amp_mask], yerr=series.stderr[amp_mask], label=name)
        )
    _write_csv(outdir / "rabi.csv", header, cols)
    render_plot(
        outdir / "rabi.svg",
        plot_series,
        title="amplitude sweep",
        xlabel="pulse amplitude",
        ylabel="normalised signal",
    )
    outputs.extend(["rabi.csv", "rabi.svg"])

    for name in names:
        r = rates[name]
        print(f"{name:>14}: rate = {r['rate']:.6g} +/- {r['stderr']:.2g}")
    worst = min(pairs.values(), key=lambda p: p["confidence"])
    print(f"lowest pairwise agreement confidence: {100 * worst['confidence']:.1f}%")

    if args.naive:
        _, naive = standard_signal(stream)
        aware = result.signal
        _write_csv(
            outdir / "naive.csv",
            ["k", "naive_value", "naive_stderr", "aware_value", "aware_stderr"],
            [
                np.arange(1, len(naive) + 1),
                naive.values,
                naive.stderr,
                aware.values,
                aware.stderr,
            ],
        )
        k = np.arange(1, len(naive) + 1)
        render_plot(
            outdir / "naive.svg",
            [
                Series(x=k, y=naive.values, yerr=naive.stderr, label="naive average"),
                Series(x=k, y=aware.values, yerr=aware.stderr, label="state-change signal"),
            ],
            title="naive averaging flattens reset-free data",
            xlabel="sequence slot k",
            ylabel="signal",
        )
        outputs.extend(["naive.csv", "naive.svg"])
        naive_span = float(np.nanmax(naive.values[amp_mask]) - np.nanmin(naive.values[amp_mask]))
        aware_span = float(np.nanmax(aware.values[amp_mask]) - np.nanmin(aware.values[amp_mask]))
        print(f"signal span: naive {naive_span:.4g}, state-change {aware_span:.4g}")

    _write_manifest(outdir, "rabi", config, seed, outputs + ["manifest.json"])
    return EXIT_OK


# -- rb -------------------------------------------------------------------------


def _epc_outputs(outdir, prefix, curves, dist, outputs):
    means, sem = curves.mean_curve()
    _write_csv(
        outdir / f"{prefix}curves.csv",
        ["length", "mean_survival", "stderr"],
        [curves.lengths, means, sem],
    )
    fit = fit_rb(curves.lengths, means, stderr=sem, dimension=curves.dimension)
    smooth_x = np.linspace(curves.lengths.min(), curves.lengths.max(), 200)
    from .fitting import rb_decay_model

    smooth_y = rb_decay_model(smooth_x, fit.fit.params)
    render_plot(
        outdir / f"{prefix}decay.svg",
        [
            Series(x=curves.lengths, y=means, yerr=sem, label="mean survival", line=False),
            Series(x=smooth_x, y=smooth_y, label="fit"),
        ],
        title="benchmarking decay",
        xlabel="sequence length",
        ylabel="survival",
    )
    hist, edges = np.histogram(dist.samples, bins=30)
    centers = 0.5 * (edges[:-1] + edges[1:])
    _write_csv(outdir / f"{prefix}epc_hist.csv", ["epc", "count"], [centers, hist])
    render_plot(
        outdir / f"{prefix}epc_hist.svg",
        [Series(x=centers, y=hist, bars=True, line=False, label="bootstrap")],
        title="error-per-Clifford bootstrap",
        xlabel="error per Clifford",
        ylabel="resamples",
    )
    _write_json(
        outdir / f"{prefix}epc.json",
        {"bootstrap": dist.to_dict(), "full_fit": {"epc": fit.epc, "stderr": fit.epc_stderr}},
    )
    outputs.extend(
        [
            f"{prefix}curves.csv",
            f"{prefix}decay.svg",
            f"{prefix}epc_hist.csv",
            f"{prefix}epc_hist.svg",
            f"{prefix}epc.json",
        ]
    )
    return fit


def cmd_rb(args) -> int:
    config = load_config_file(args.config)
    exp = dict(config.get("experiment", {}))
    if exp.get("kind") != "rb":
        raise ValueError("rb command needs an experiment of kind 'rb'")
    sim = SimConfig.from_dict(config.get("sim", {}))
    seed = _resolve_seed(sim.seed, args.seed)
    lengths = [int(n) for n in exp["lengths"]]
    n_sequences = int(exp["n_sequences"])
    epc = float(exp["epc"])
    dimension = int(exp.get("dimension", 2))
    spread = float(exp.get("decay_spread", 0.0))
    n_rep = int(exp["num_repetitions"])
    subset = args.subset or int(exp.get("subset_size", min(100, n_sequences)))
    resamples = args.resamples or int(exp.get("n_resamples", 1000))
    level = exp.get("level", "curves")

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs: list = []

    if level == "curves":
        curves = simulate_rb_curves(
            lengths, n_sequences, n_rep, epc, dimension=dimension, seed=seed, decay_spread=spread
        )
        dist = bootstrap_epc(curves, subset, n_resamples=resamples, seed=seed)
        _epc_outputs(outdir, "", curves, dist, outputs)
        print(
            f"EPC = {100 * dist.mean:.4f}% +/- {100 * dist.std:.4f}% "
            f"({dist.n_failures} failed resamples, true {100 * epc:.4f}%)"
        )
    elif level == "shots":
        if dimension != 2:
            raise ValueError("shot-level benchmarking is single-qubit only")
        sim = dataclasses.replace(sim, seed=seed)
        meta = rb_sequence_meta(
            lengths,
            n_sequences,
            epc,
            seed=int(exp.get("sequence_seed", 0)),
            decay_spread=spread,
        )
        stream, _ = simulate_restless(sim, meta, n_rep)
        result = analyze_restless(stream)
        selection = rb_postselect(result.labeled)
        curves_all = rb_curves_from_labels(result.labeled, meta)
        curves_sel = rb_curves_from_labels(result.labeled, meta, selection=selection)
        dist_all = bootstrap_epc(curves_all, subset, n_resamples=resamples, seed=seed)
        dist_sel = bootstrap_epc(curves_sel, subset, n_resamples=resamples, seed=seed)
        _epc_outputs(outdir, "all_", curves_all, dist_all, outputs)
        _epc_outputs(outdir, "selected_", curves_sel, dist_sel, outputs)
        print(
            f"EPC (all shots)      = {100 * dist_all.mean:.4f}% +/- {100 * dist_all.std:.4f}%"
        )
        print(
            f"EPC (post-selected)  = {100 * dist_sel.mean:.4f}% +/- {100 * dist_sel.std:.4f}% "
            f"(retained {100 * selection.retained_fraction:.1f}%, true {100 * epc:.4f}%)"
        )
    else:
        raise ValueError(f"unknown rb level {level!r}")

    _write_manifest(outdir, "rb", config, seed, outputs + ["manifest.json"])
    return EXIT_OK


# -- bench ----------------------------------------------------------------------


def cmd_bench(args) -> int:
    sizes = tuple(int(s) for s in args.sizes.split(",")) if args.sizes else None
    svd_sizes = tuple(int(s) for s in args.svd_sizes.split(",")) if args.svd_sizes else None
    seed = _env_seed()
    report = run_scaling(
        sizes=sizes, svd_sizes=svd_sizes, repeats=args.repeats, seed=0 if seed is None else seed
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        outdir / "bench.csv",
        ["method", "n_points", "median_seconds"],
        [
            np.array([r.method for r in report.rows]),
            np.array([r.n_points for r in report.rows]),
            np.array([r.median_seconds for r in report.rows]),
        ],
    )
    _write_json(outdir / "bench.json", report.to_dict())
    plot_series = []
    for method in report.exponents:
        rows = [r for r in report.rows if r.method == method]
        plot_series.append(
            Series(
                x=[r.n_points for r in rows],
                y=[r.median_seconds for r in rows],
                label=method,
                markers=True,
            )
        )
    render_plot(
        outdir / "bench.svg",
        plot_series,
        title="runtime scaling",
        xlabel="points",
        ylabel="seconds",
        logx=True,
        logy=True,
    )
    for method, (slope, _) in report.exponents.items():
        print(f"{method:>18}: exponent {slope:.2f}")
    shared = {}
    for r in report.rows:
        shared.setdefault(r.method, {})[r.n_points] = r.median_seconds
    if "restless_analysis" in shared and "kmeans" in shared:
        common = sorted(set(shared["restless_analysis"]) & set(shared["kmeans"]))
        if common:
            n = common[-1]
            t_r, t_k = shared["restless_analysis"][n], shared["kmeans"][n]
            verdict = "faster" if t_r < t_k else "NOT faster (soft check)"
            print(f"at n={n}: analysis {t_r:.4g}s vs clustering {t_k:.4g}s -> analysis {verdict}")
    _write_manifest(
        outdir,
        "bench",
        {"sizes": sizes, "svd_sizes": svd_sizes, "repeats": args.repeats},
        seed,
        ["bench.csv", "bench.json", "bench.svg", "manifest.json"],
    )
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="restless",
        description="Reset-free single-shot readout: simulation and analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {_package_version()}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a shot stream from a config file")
    p_sim.add_argument("--config", required=True, help="JSON or TOML config")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--format", choices=("csv", "binary"), default="binary")
    p_sim.add_argument("--truth", action="store_true", help="store true states alongside IQ")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(handler=cmd_simulate)

    p_an = sub.add_parser("analyze", help="run the signal extraction on a stored stream")
    p_an.add_argument("--stream", required=True, help="stream file (csv or binary)")
    p_an.add_argument("--config", default=None, help="experiment config for gate tags")
    p_an.add_argument("--out", required=True)
    p_an.add_argument(
        "--method", choices=(METHOD_QUANTILE, METHOD_CDF_GAP), default=METHOD_QUANTILE
    )
    p_an.add_argument("--spam", action="store_true", help="estimate readout fidelities")
    p_an.add_argument("--spam-correct", action="store_true", help="also write corrected signals")
    p_an.add_argument("--dprime", action="store_true", help="calibration-free separation signal")
    p_an.set_defaults(handler=cmd_analyze)

    p_rabi = sub.add_parser("rabi", help="four-way amplitude-sweep comparison")
    p_rabi.add_argument("--config", required=True)
    p_rabi.add_argument("--out", required=True)
    p_rabi.add_argument("--seed", type=int, default=None)
    p_rabi.add_argument("--naive", action="store_true", help="also write the naive-averaging plot")
    p_rabi.set_defaults(handler=cmd_rabi)

    p_rb = sub.add_parser("rb", help="benchmarking decay and bootstrap")
    p_rb.add_argument("--config", required=True)
    p_rb.add_argument("--out", required=True)
    p_rb.add_argument("--seed", type=int, default=None)
    p_rb.add_argument("--subset", type=int, default=None)
    p_rb.add_argument("--resamples", type=int, default=None)
    p_rb.set_defaults(handler=cmd_rb)

    p_bench = sub.add_parser("bench", help="runtime scaling of the analysis")
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--sizes", default=None, help="comma-separated point counts")
    p_bench.add_argument("--svd-sizes", default=None, help="ladder for the SVD baseline")
    p_bench.add_argument("--repeats", type=int, default=3)
    p_bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
