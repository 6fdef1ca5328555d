"""Command-line interface.

Subcommands:
  run      execute a configured experiment and write the CSV report
  analyze  closed-form analytics (halfwidth, stoptime, absorption, convert)
  truth    Monte-Carlo ground-truth estimation to a CSV sidecar
  serve    start the interactive session service
"""

from __future__ import annotations

import argparse
import os
import sys

from . import odds


def _cmd_run(args) -> int:
    import json

    from .harness import emit_csv, load_config_file, run_macro

    threads = args.threads
    if threads is None:
        env = os.environ.get("FEASLAB_THREADS")
        threads = int(env) if env else None
    config = load_config_file(
        args.config,
        seed_override=args.seed,
        reps_override=args.reps,
        threads_override=threads,
    )
    report = run_macro(config)
    out = args.out
    if out is None:
        with open(args.config, encoding="utf-8") as f:
            out = json.load(f).get("out")
    out = out or f"{config.config_id}.csv"
    emit_csv(report, out)
    se = f" (se {report.pcd_se:.4f})" if report.pcd_se is not None else ""
    print(f"{config.config_id}: procedure={report.procedure} reps={report.macro_reps}")
    print(f"  pcd={report.pcd_hat:.4f}{se}")
    for w, mean in enumerate(report.obs_pass_mean, start=1):
        print(f"  obs[{w}]={mean:.1f}")
    print(f"  obs_total={report.obs_total_mean:.1f}")
    print(f"  report written to {out}")
    return 0


def _cmd_analyze(args) -> int:
    if args.what == "halfwidth":
        print(odds.continuation_halfwidth(args.beta, args.theta))
    elif args.what == "stoptime":
        print(f"{odds.expected_stopping_time(args.p, args.h, args.H):.6f}")
    elif args.what == "absorption":
        print(f"{odds.absorption_probability(args.p, args.h, args.H):.6f}")
    elif args.what == "convert":
        thresholds = [float(t) for t in args.thresholds.split(",")]
        conv = odds.tolerance_convert(thresholds, args.theta)
        print(f"epsilon={conv.epsilon:.6f} epsilon_tilde={conv.epsilon_tilde:.6f}")
        for h, t in zip(thresholds, conv.per_threshold):
            print(
                f"h={h}: lb={t.lb:.6f} ub={t.ub:.6f} eps={t.epsilon:.6f} "
                f"eps_tilde={t.epsilon_tilde:.6f} h_tilde={t.h_tilde:.6f}"
            )
    return 0


def _cmd_truth(args) -> int:
    import json

    from .harness import _build_source
    from .testbeds import estimate_truth, write_truth_csv

    with open(args.config, encoding="utf-8") as f:
        body = json.load(f)
    source = _build_source(body["source"])
    est = estimate_truth(source, args.n, args.seed)
    write_truth_csv(est, args.out)
    print(f"wrote {source.k} x {source.s} truth estimates ({args.n} reps each) to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.state_dir), host="127.0.0.1", port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="feaslab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--reps", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--threads", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=_cmd_run)

    p_an = sub.add_parser("analyze", help="closed-form analytics")
    an_sub = p_an.add_subparsers(dest="what", required=True)
    p_hw = an_sub.add_parser("halfwidth")
    p_hw.add_argument("--beta", type=float, required=True)
    p_hw.add_argument("--theta", type=float, required=True)
    p_st = an_sub.add_parser("stoptime")
    p_st.add_argument("--p", type=float, required=True)
    p_st.add_argument("--h", type=float, required=True)
    p_st.add_argument("--H", type=int, required=True)
    p_ab = an_sub.add_parser("absorption")
    p_ab.add_argument("--p", type=float, required=True)
    p_ab.add_argument("--h", type=float, required=True)
    p_ab.add_argument("--H", type=int, required=True)
    p_cv = an_sub.add_parser("convert")
    p_cv.add_argument("--thresholds", required=True, help="comma-separated list")
    p_cv.add_argument("--theta", type=float, required=True)
    p_an.set_defaults(func=_cmd_analyze)

    p_truth = sub.add_parser("truth", help="estimate ground-truth probabilities")
    p_truth.add_argument("--config", required=True)
    p_truth.add_argument("--n", type=int, required=True)
    p_truth.add_argument("--seed", type=int, default=0xFEA51AB)
    p_truth.add_argument("--out", required=True)
    p_truth.set_defaults(func=_cmd_truth)

    p_serve = sub.add_parser("serve", help="start the session service")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--state-dir", default="feaslab-sessions")
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
