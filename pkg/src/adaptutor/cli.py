"""Operator command line: run simulations, analyze results, serve the tutor.

Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .config import (
    experiment_config_from,
    load_config_file,
    service_config_from,
)
from .errors import ConfigurationError
from .simulator import read_metrics, run_experiment, write_run
from .stats import bonferroni, mann_whitney_u, quartiles

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class _OutputLock:
    """One command at a time per output directory."""

    def __init__(self, outdir: Path) -> None:
        self.path = outdir / ".lock"
        self.fd: int | None = None

    def __enter__(self) -> "_OutputLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigurationError(
                f"output directory is locked by another run: {self.path}"
            ) from None
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *_exc) -> None:
        if self.fd is not None:
            os.close(self.fd)
        self.path.unlink(missing_ok=True)


def cmd_simulate(args: argparse.Namespace) -> int:
    data = load_config_file(args.config)
    cfg = experiment_config_from(data)
    outdir = Path(args.out)
    with _OutputLock(outdir):
        results = run_experiment(cfg, workers=args.workers)
        write_run(outdir, cfg, results)
    manifest = outdir / "manifest.json"
    print(f"wrote {manifest} and metric tables for {len(results)} teachers")
    return EXIT_OK


def _comparison(name: str, model: list[float], baseline: list[float]) -> dict:
    u, p = mann_whitney_u(model, baseline)
    q1_m, med_m, q3_m = quartiles(model)
    q1_b, med_b, q3_b = quartiles(baseline)
    return {
        "metric": name,
        "u": u,
        "p": p,
        # Two comparisons per dataset (count and ratio): correct by 2.
        "p_corrected": bonferroni(p, 2),
        "model": {"median": med_m, "iqr": [q1_m, q3_m], "n": len(model)},
        "baseline": {"median": med_b, "iqr": [q1_b, q3_b], "n": len(baseline)},
    }


def analyze_metrics(metrics_dir: Path) -> dict:
    table = read_metrics(metrics_dir)
    if "leitner" not in table:
        raise ConfigurationError("metrics are missing the baseline arm: leitner")
    model_arms = [k for k in table if k != "leitner"]
    if not model_arms:
        raise ConfigurationError("metrics hold only the baseline arm; nothing to compare")
    baseline = table["leitner"]
    report: dict = {"baseline": "leitner", "comparisons": []}
    for arm in model_arms:
        rows = table[arm]
        learned = _comparison(
            "n_learned",
            [float(r["n_learned"]) for r in rows],
            [float(r["n_learned"]) for r in baseline],
        )
        ratio = _comparison(
            "learned_seen_ratio",
            [r["ratio"] for r in rows if r["ratio"] is not None],
            [r["ratio"] for r in baseline if r["ratio"] is not None],
        )
        report["comparisons"].append({"teacher": arm, "results": [learned, ratio]})
    return report


def _format_report(report: dict) -> str:
    lines = [f"baseline: {report['baseline']}"]
    for block in report["comparisons"]:
        lines.append(f"\n{block['teacher']} vs {report['baseline']}")
        for res in block["results"]:
            m, b = res["model"], res["baseline"]
            verdict = "significant" if res["p_corrected"] < 0.05 else "not significant"
            lines.append(
                f"  {res['metric']}: U={res['u']:.1f} p={res['p']:.4g}"
                f" corrected={res['p_corrected']:.4g} ({verdict})"
            )
            lines.append(
                f"    {block['teacher']}: median={m['median']:.4g}"
                f" IQR=[{m['iqr'][0]:.4g}, {m['iqr'][1]:.4g}] n={m['n']}"
            )
            lines.append(
                f"    {report['baseline']}: median={b['median']:.4g}"
                f" IQR=[{b['iqr'][0]:.4g}, {b['iqr'][1]:.4g}] n={b['n']}"
            )
    return "\n".join(lines)


def cmd_analyze(args: argparse.Namespace) -> int:
    metrics_dir = Path(args.metrics)
    report = analyze_metrics(metrics_dir)
    print(_format_report(report))
    out = metrics_dir / "report.json"
    with open(out, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(metrics_dir / "comparisons.tsv", "w") as fh:
        fh.write(
            "teacher\tmetric\tu\tp\tp_corrected\tmodel_median\tbaseline_median\n"
        )
        for block in report["comparisons"]:
            for res in block["results"]:
                fh.write(
                    f"{block['teacher']}\t{res['metric']}\t{res['u']:.10g}\t{res['p']:.10g}"
                    f"\t{res['p_corrected']:.10g}\t{res['model']['median']:.10g}"
                    f"\t{res['baseline']['median']:.10g}\n"
                )
    print(f"\nwrote {out} and comparisons.tsv")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    data = load_config_file(args.config)
    cfg = service_config_from(data)
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(cfg.data_dir, os.W_OK):
        raise ConfigurationError(f"data dir is not writable: {cfg.data_dir}")
    static = Path(args.static) if args.static else None
    app = create_app(cfg, static_dir=static)
    print(f"serving on http://{cfg.host}:{cfg.port} (data: {cfg.data_dir})")
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adaptutor",
        description="Adaptive vocabulary tutor: simulate, analyze, serve.",
    )
    parser.add_argument("--version", action="version", version=f"adaptutor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an artificial-learner experiment")
    sim.add_argument("--config", required=True, help="JSON experiment config")
    sim.add_argument("--out", required=True, help="output directory for run artifacts")
    sim.add_argument("--workers", type=int, default=1, help="parallel learner processes")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="compare teachers from a simulation run")
    ana.add_argument("--metrics", required=True, help="directory written by simulate")
    ana.set_defaults(func=cmd_analyze)

    srv = sub.add_parser("serve", help="run the live tutor service")
    srv.add_argument("--config", required=True, help="JSON service config")
    srv.add_argument("--static", default=None, help="directory with the web client build")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
