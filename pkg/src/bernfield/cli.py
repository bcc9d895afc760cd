"""Command-line front end.

Exit codes: 0 when every configured test passes, 1 when any fails, 2 for
usage or configuration errors, 3 for I/O failures.
"""

import argparse
import json
import os
import sys
import tempfile
from datetime import datetime, timezone

import numpy as np

from bernfield import __version__, config as cfgmod, svg
from bernfield.dependence import dependence_report
from bernfield.errors import BernfieldError
from bernfield.harness import (
    ExperimentResult, TestOutcome, config_hash, run_clt, run_counterexample1,
    run_counterexample2, run_fdd_covariance, run_path_export,
)
from bernfield.innovations import parse_seed
from bernfield.oracle import run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

DEFAULT_PRESET = {
    "clt": "clt_kernel_d2", "fdd": "fdd_set_lebesgue", "paths": "paths_brownian",
    "dependence": "dependence_kernel_d2",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", default=default, help="master seed (decimal or 0x-hex)")
    parser.add_argument("--reps", type=int, default=default, help="number of replications")
    parser.add_argument("--out-dir", default=default, help="output directory")
    parser.add_argument("--config", default=default, help="JSON experiment file")
    parser.add_argument("--preset", default=default, help="built-in experiment preset")
    parser.add_argument("--workers", type=int, default=default, help="worker threads")


def build_parser():
    parser = _Parser(prog="bernfield", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    parser.add_argument("--list-presets", action="store_true", help="print built-in presets")
    parser.add_argument("--version", action="version", version=f"bernfield {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    common = _Parser(add_help=False)
    _global_options(common, suppress=True)
    for name, text in (("clt", "CLT experiment"), ("fdd", "finite-dimensional covariances"),
                       ("paths", "export replicated paths"),
                       ("dependence", "dependence coefficients report")):
        sub.add_parser(name, parents=[common], help=text)
    ce = sub.add_parser("counterexample", parents=[common], help="non-convergence examples")
    ce.add_argument("--which", type=int, choices=(1, 2), required=True)
    oc = sub.add_parser("oracle-check", parents=[common], help="exact identity suite")
    oc.add_argument("--n-weights", type=int, default=100)
    return parser


def _descriptor(args, experiment):
    if args.config and args.preset:
        raise UsageError("give either --config or --preset, not both")
    if args.config:
        if not os.path.isfile(args.config):
            raise UsageError(f"config file {args.config!r} does not exist")
        data = cfgmod.load_config(args.config)
    else:
        name = args.preset or DEFAULT_PRESET.get(experiment) or experiment
        data = cfgmod.preset(name)
    if data.get("experiment") != experiment:
        raise UsageError(f"config describes experiment {data.get('experiment')!r}, "
                         f"not {experiment!r}")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.reps is not None:
        data["reps"] = args.reps
    if args.workers is not None:
        data["workers"] = args.workers
    return data


def _atomic_write(path, text):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def samples_csv(result):
    """CSV text with a header row, '.' decimals and '\\n' line endings."""
    lines = [",".join(("replication",) + tuple(result.columns))]
    samples = np.asarray(result.samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[:, np.newaxis]
    for i, row in enumerate(samples):
        lines.append(",".join([str(i)] + [repr(float(v)) for v in row]))
    return "\n".join(lines) + "\n"


def _plots(result):
    """Histogram, QQ plot and running variance-ratio trace for CLT runs."""
    if result.experiment != "clt" or not result.tests:
        return {}
    z = np.asarray(result.samples, dtype=float)
    ks = next((t for t in result.tests if t.name == "ks_normal"), None)
    sd = ks.details["target_sd"] if ks else float(np.sqrt(max(result.statistics["sigma2"], 0.0)))
    k = np.arange(1, len(z) + 1)
    mean = np.cumsum(z) / k
    sq = np.cumsum(z * z)
    running = (sq[1:] - k[1:] * mean[1:] ** 2) / (k[1:] - 1)
    step = max(1, len(running) // 500)
    out = {"histogram.svg": svg.histogram(z, sd=sd), "qq.svg": svg.qq(z, sd=sd if sd > 0 else 1.0)}
    if sd > 0:
        out["trace.svg"] = svg.trace(k[1::step], running[::step] / sd ** 2, reference=1.0)
    else:
        out["trace.svg"] = svg.trace(k[1::step], running[::step], reference=0.0,
                                     title="Running variance", ylabel="variance")
    return out


def emit_outputs(result, out_dir, started, extra=None):
    """Write results.json, samples.csv, plots and manifest.json; return file names."""
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    payload = result.to_dict()
    if extra:
        payload.update(extra)
    files["results.json"] = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if result.samples is not None:
        files["samples.csv"] = samples_csv(result)
    files.update(_plots(result))
    for name, text in files.items():
        _atomic_write(os.path.join(out_dir, name), text)
    manifest = {
        "tool": "bernfield", "version": __version__, "config_hash": result.config_hash,
        "seed": str(result.seed), "started": started,
        "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runtime_seconds": round(result.runtime, 3), "files": sorted(files),
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return sorted(files) + ["manifest.json"]


def _summary(result):
    for t in result.tests:
        status = "PASS" if t.passed else "FAIL"
        print(f"{status} {t.name}: statistic={t.statistic:.6g} threshold={t.threshold:.6g}")
    print(f"{result.experiment}: {'all tests passed' if result.passed else 'some tests failed'}")


def _run_dependence(cfg):
    opts = cfg.options
    report = dependence_report(cfg.model, ps=opts.get("ps", (2,)),
                               window_radius=opts.get("window_radius"),
                               n_outer=opts.get("n_outer", 2000), n_inner=opts.get("n_inner", 8),
                               seed=cfg.seed)
    tests = []
    if 2 in report.delta_p:
        tests.append(TestOutcome("covariance_bound", report.cov_sum_abs, report.delta_p[2] ** 2,
                                 report.covariance_bound_holds()))
    return ExperimentResult("dependence", cfg.seed, cfg.reps, cfg.hash, report.to_dict(), tests,
                            diagnostics={"warnings": report.warnings})


def _run_oracle(args):
    seed = parse_seed(args.seed) if args.seed is not None else 0
    results = run_suite(seed=seed, n_weights=args.n_weights)
    for r in results:
        print(r.line())
    tests = [TestOutcome(r.name, r.value, r.bound, r.passed) for r in results]
    descriptor = {"experiment": "oracle-check", "seed": str(seed), "n_weights": args.n_weights}
    return ExperimentResult("oracle-check", seed, 0, config_hash(descriptor),
                            {"checks": len(results)}, tests)


RUNNERS = {
    "clt": run_clt, "fdd": run_fdd_covariance, "paths": run_path_export,
    "counterexample1": run_counterexample1, "counterexample2": run_counterexample2,
    "dependence": _run_dependence,
}


def _list_presets():
    for name, (label, desc) in cfgmod.PRESETS.items():
        print(f"{name:24s} [{desc['experiment']}] {label}")
    print("model presets: example1 'full' (alpha_k = 2^-k^2, n_k = 2^3k^2), "
          "example1 'small' (alpha_k = 2^-k, n_k = 2^(k^2+k+1))")


def main(argv=None):
    parser = build_parser()
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        args = parser.parse_args(argv)
        if args.list_presets:
            _list_presets()
            return EXIT_OK
        if args.command is None:
            raise UsageError("a subcommand is required (see --help)")
        experiment = args.command
        if args.command == "counterexample":
            experiment = f"counterexample{args.which}"
        out_dir = args.out_dir or os.path.join("bernfield_out", experiment)
        if args.command == "oracle-check":
            os.makedirs(out_dir, exist_ok=True)
            result = _run_oracle(args)
        else:
            data = _descriptor(args, experiment)
            os.makedirs(out_dir, exist_ok=True)
            cfg = cfgmod.build_config(data)
            result = RUNNERS[experiment](cfg)
            _summary(result)
        files = emit_outputs(result, out_dir, started)
        print(f"wrote {', '.join(files)} to {out_dir}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BernfieldError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK if result.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
