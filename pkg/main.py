# main.py

import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from controllers.main_controller import LIGHT_NAMES, MainController
from models.batch_model import VARIANTS
from models.errors import BzGateError
from models.experiment_config import ExperimentConfig
from views.console_view import ConsoleView


def setup_logging():
    log_level = os.getenv("LOG_LEVEL", "DEBUG").upper()
    numeric_level = getattr(logging, log_level, logging.DEBUG)
    logging.basicConfig(
        filename=os.getenv("LOG_FILE", "bz_gate_evolver.log"),
        filemode='a',
        format='%(asctime)s - %(levelname)s - %(message)s',
        level=numeric_level
    )
    logging.info("Logging is set up.")


def _bits(text):
    if len(text) != 2 or any(c not in "01" for c in text):
        raise argparse.ArgumentTypeError(f"input bits must look like 00, 01, 10 or 11, got {text!r}")
    return int(text[0]), int(text[1])


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bz-gate-evolver",
        description="Evolve CA light controllers that turn a simulated BZ medium into logic gates."
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="stencil worker threads (default: NUMBA_NUM_THREADS or all cores)")
    sub = parser.add_subparsers(dest="verb", required=True)

    def experiment_flags(p):
        p.add_argument("--config", help="KEY=VALUE experiment config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--gate", choices=["AND", "NAND", "XOR"], type=str.upper)
        p.add_argument("--memory", choices=["none", "explicit", "widrow_hoff"])
        p.add_argument("--controller", choices=["coevolutionary", "random"])
        p.add_argument("--runs", type=int)
        p.add_argument("--budget", type=int, help="input presentations per run")
        p.add_argument("--workers", type=int)
        p.add_argument("--output-dir")

    p = sub.add_parser("run", help="one hillclimber search")
    experiment_flags(p)
    p.add_argument("--run-index", type=int, default=0)

    p = sub.add_parser("batch", help="independent runs with Table-style statistics")
    experiment_flags(p)
    p.add_argument("--variants", nargs="*", choices=list(VARIANTS),
                   help="controller variants to compare (no names: all four)")

    p = sub.add_parser("replay", help="re-run a saved genome and export frames")
    p.add_argument("result", help="result.json or its run directory")
    p.add_argument("--out", help="replay artifact directory (default: <run>/replay)")

    p = sub.add_parser("validate-config", help="check a config file and print it with defaults")
    experiment_flags(p)

    p = sub.add_parser("render", help="export one medium state after wave initiation")
    experiment_flags(p)
    p.add_argument("--input", type=_bits, default=(1, 1))
    p.add_argument("--epochs", type=int, default=0)
    p.add_argument("--light", choices=list(LIGHT_NAMES), default="low")

    p = sub.add_parser("regimes", help="fragment area per epoch under each uniform light level")
    experiment_flags(p)
    p.add_argument("--epochs", type=int, default=5)

    p = sub.add_parser("export-mask", help="write the built-in initiation mask as P5")
    experiment_flags(p)
    p.add_argument("path")
    return parser


def load_config(args) -> ExperimentConfig:
    path = getattr(args, "config", None)
    config = ExperimentConfig.load(path) if path else ExperimentConfig()
    return config.with_overrides(
        run_seed=getattr(args, "seed", None),
        gate_name=getattr(args, "gate", None),
        ca_memory=getattr(args, "memory", None),
        search_controller=getattr(args, "controller", None),
        run_runs=getattr(args, "runs", None),
        search_budget=getattr(args, "budget", None),
        run_workers=getattr(args, "workers", None),
        run_output_dir=getattr(args, "output_dir", None),
    )


def main(argv=None):
    load_dotenv()
    setup_logging()
    args = build_parser().parse_args(argv)
    logging.info(f"App started: {args.verb}.")

    if args.threads:
        import numba
        numba.set_num_threads(args.threads)

    view = ConsoleView()
    try:
        config = load_config(args)
    except BzGateError as e:
        logging.error(f"Config error: {e}")
        view.show_error_message("Config Error", str(e))
        return 2
    controller = MainController(view, config)

    if args.verb == "run":
        result = controller.run_single(args.run_index)
    elif args.verb == "batch":
        variants = None
        if args.variants is not None:
            variants = args.variants or list(VARIANTS)
        result = controller.run_batch(variants)
    elif args.verb == "replay":
        result = controller.replay(args.result, args.out)
    elif args.verb == "validate-config":
        result = controller.validate_config()
    elif args.verb == "render":
        result = controller.render_state(args.input, args.epochs, args.light, args.output_dir)
    elif args.verb == "regimes":
        result = controller.regimes(args.epochs)
    else:
        result = controller.export_mask(args.path)

    status = 0 if result is not None else 1
    logging.info(f"App finished: {args.verb} (exit {status}).")
    return status


if __name__ == "__main__":
    sys.exit(main())
