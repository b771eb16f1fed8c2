"""Command line entry point: ``gwcover {gen-tree,run,report,selftest}``."""

import argparse
import os
import sys

from .errors import IncompleteExperiment, InvalidRegime, RejectionBudgetExceeded, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_SELFTEST = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="gwcover", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="override master_seed (u64)")
        sp.add_argument("--workers", type=int, help="override worker count")
        sp.add_argument("--out", help="override output directory")

    common(sub.add_parser("gen-tree", help="sample and serialize the experiment tree"))
    common(sub.add_parser("run", help="run an experiment and write raw CSVs, manifest and report"))
    rp = sub.add_parser("report", help="recompute the summary report of a finished run")
    rp.add_argument("--out", required=True, help="experiment output directory")
    st = sub.add_parser("selftest", help="quick acceptance checks; exit code 3 on failure")
    st.add_argument("--out", help="scratch directory for the determinism check")
    return p


def _config(args):
    from .experiments import load_config

    return load_config(args.config, master_seed=args.seed, workers=args.workers, output_dir=args.out)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "gen-tree":
            from .experiments import TREE_FILE, experiment_tree, write_tree_atomic

            cfg = _config(args)
            os.makedirs(cfg.output_dir, exist_ok=True)
            tree = experiment_tree(cfg)
            path = os.path.join(cfg.output_dir, TREE_FILE)
            write_tree_atomic(tree, path, cfg.lam, cfg.master_seed)
            print(f"wrote {path}: {tree.size - 1} vertices, Z_n = {int(tree.z[-1])}, rejections = {tree.rejections}")
        elif args.command == "run":
            from .experiments import run_experiment

            out = run_experiment(_config(args))
            with open(os.path.join(out, "report.txt")) as fh:
                sys.stdout.write(fh.read())
        elif args.command == "report":
            from .experiments import report

            sys.stdout.write(report(args.out))
        elif args.command == "selftest":
            from .selftest import run_selftest

            return EXIT_OK if run_selftest(args.out) else EXIT_SELFTEST
    except (ValidationError, InvalidRegime, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (IncompleteExperiment, RejectionBudgetExceeded, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
