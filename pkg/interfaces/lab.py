"""Command-line entry point for the Gibbs concentration lab.

    python interfaces/lab.py <scenario> --spec file.json [--seed N] [--out dir]
    python interfaces/lab.py sweep --spec file.json --parameter beta --grid 0.1 0.2 0.3
    python interfaces/lab.py sample --model-config model.json --boundary plus --n 4 --out samples.txt

Exit codes: 0 every check passed, 1 a bound was falsified, 2 inconclusive,
3 usage or resource error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

# Add the interfaces directory to the Python path
sys.path.insert(0, str(Path(__file__).parent))

from src.config import LabConfig, get_config, setup_logging  # noqa: E402
from src.exceptions import LabError  # noqa: E402
from src.experiments.runner import EXIT_USAGE, SWEEP_PARAMETERS, ExperimentRunner  # noqa: E402
from src.experiments.spec import SCENARIOS, load_spec  # noqa: E402
from src.lattice.geometry import Boundary, Geometry, Window  # noqa: E402
from src.models.model_config import build_potential, load_model_params  # noqa: E402
from src.sampling.sampler import ChainConfig, KernelKind, run_chains  # noqa: E402

logger = logging.getLogger("lab")

BOUNDARY_GEOMETRY = {"plus": Geometry.FIXED, "minus": Geometry.FIXED, "free": Geometry.FREE, "periodic": Geometry.TORUS}


class LabArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the lab's usage code instead of argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="lab", description="Exact and sampled checks of concentration bounds for lattice Gibbs measures.")
    commands = parser.add_subparsers(dest="command", required=True)

    for scenario in SCENARIOS:
        sub = commands.add_parser(scenario, help=f"run the {scenario} scenario")
        sub.add_argument("--spec", required=True, help="experiment spec (JSON)")
        sub.add_argument("--seed", type=int, default=None, help="replace the spec's seed")
        sub.add_argument("--out", default=None, help="output directory")

    sweep = commands.add_parser("sweep", help="run a spec over a parameter grid")
    sweep.add_argument("--spec", required=True)
    sweep.add_argument("--parameter", required=True, choices=SWEEP_PARAMETERS)
    sweep.add_argument("--grid", required=True, type=float, nargs="+")
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--out", default=None)

    sample = commands.add_parser("sample", help="run MCMC chains and write the samples")
    sample.add_argument("--model-config", required=True, help="model descriptor: JSON file or inline JSON")
    sample.add_argument("--geometry", choices=["fixed", "free", "torus"], default=None)
    sample.add_argument("--boundary", choices=sorted(BOUNDARY_GEOMETRY), default="plus")
    sample.add_argument("--n", type=int, default=4, help="window radius")
    sample.add_argument("--side", type=int, default=None, help="explicit window side")
    sample.add_argument("--kernel", choices=[k.value for k in KernelKind], default=KernelKind.HEAT_BATH.value)
    sample.add_argument("--sweeps", type=int, default=1000, help="burn-in sweeps")
    sample.add_argument("--thin", type=int, default=1, help="sweeps between samples")
    sample.add_argument("--samples", type=int, default=1000, help="samples per chain")
    sample.add_argument("--chains", type=int, default=1)
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--out", required=True, help="sample file")
    return parser


def _sample(args: argparse.Namespace, config: LabConfig) -> int:
    params = load_model_params(args.model_config)
    geometry = BOUNDARY_GEOMETRY[args.boundary]
    if args.geometry is not None and Geometry.parse(args.geometry) is not geometry:
        raise LabError(f"--boundary {args.boundary} does not fit --geometry {args.geometry}")
    q = params.alphabet_size
    if args.side is not None:
        window = Window.with_side(params.d, args.side, geometry, q)
    else:
        window = Window(d=params.d, n=args.n, geometry=geometry, alphabet_size=q)
    boundary = {"plus": Boundary.plus(q), "minus": Boundary.minus()}.get(args.boundary)
    cfg = ChainConfig(
        window=window,
        boundary=boundary,
        potential=build_potential(params),
        kernel=KernelKind(args.kernel),
        sweeps_burnin=args.sweeps,
        sweeps_between_samples=args.thin,
        n_samples=args.samples,
        n_chains=args.chains,
        seed=args.seed,
    )
    samples = run_chains(cfg, config)
    samples.write(args.out)
    logger.info(f"Wrote {len(samples)} samples to {args.out}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    config = get_config()
    setup_logging(config)
    try:
        if args.command == "sample":
            return _sample(args, config)
        runner = ExperimentRunner(config)
        spec = load_spec(args.spec)
        if args.seed is not None:
            spec = spec.updated(seed=args.seed)
        if args.command == "sweep":
            return runner.sweep(spec, args.parameter, args.grid, args.out).exit_code
        if spec.scenario != args.command:
            raise LabError(f"spec describes {spec.scenario!r}, not {args.command!r}")
        return runner.run(spec, args.out).exit_code
    except (LabError, ValidationError, ValueError, OSError) as e:
        logger.error(f"{args.command}: {str(e)}")
        return EXIT_USAGE
    except Exception as e:
        logger.exception(f"{args.command} aborted: {str(e)}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
