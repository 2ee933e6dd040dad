"""Main entry point for the mural-forest command line"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add the src directory to the Python path
sys.path.insert(0, str(Path(__file__).parent))

from datamodel import ConfigError, InvariantError, MuralError
from utils.config_loader import RunConfig, default_threads, load_configuration

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INVARIANT = 2

# flag -> ForestConfig field
FOREST_FLAGS = {
    'trees': 'n_trees',
    'depth': 'max_depth',
    'split_vars': 'n_candidate_vars',
    'entropy_dims': 'entropy',
    'mnar_levels': 'mnar_restrict_levels',
    'min_leaf': 'min_leaf',
    'bins': 'n_bins',
    'seed': 'seed',
}


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are user errors (exit 1), not argparse's default 2"""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: usage: {message}", file=sys.stderr)
        sys.exit(EXIT_USER_ERROR)


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML configuration file (default: config.yaml)')
    common.add_argument('--threads', type=int, help='worker count (default: $MURAL_THREADS or 1)')
    common.add_argument('--verbose', action='store_true', help='debug logging on stderr')
    common.add_argument('--out', help='output directory')
    common.add_argument('--trees', type=int)
    common.add_argument('--depth', type=int)
    common.add_argument('--split-vars', type=int)
    common.add_argument('--entropy-dims', help="joint entropy dimensions or 'marginal'")
    common.add_argument('--mnar-levels', type=int)
    common.add_argument('--min-leaf', type=int)
    common.add_argument('--bins', type=int, help='fixed bin count (default: Sturges per node)')
    common.add_argument('--seed', type=int)
    common.add_argument('--format', choices=['csv', 'bin'], help='matrix file format')
    common.add_argument('--bandwidth', help="affinity bandwidth: a number or knn:<k>")
    common.add_argument('--k', type=int, help='cluster count')

    parser = _ArgumentParser(
        prog='mural',
        description='Unsupervised random forests for mixed-type data with informative missingness',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    fit = sub.add_parser('fit', parents=[common], help='fit a forest on a CSV')
    fit.add_argument('data')
    fit.add_argument('schema')
    fit.add_argument('--check', action='store_true', help='scan the fitted forest for structural violations')

    dist = sub.add_parser('dist', parents=[common], help='export the forest distance matrix')
    dist.add_argument('forest')
    dist.add_argument('data', nargs='?')
    dist.add_argument('--affinity', action='store_true', help='also write the affinity and diffusion matrices')

    tswd = sub.add_parser('tswd', parents=[common], help='tree-sliced Wasserstein distance between cohorts')
    tswd.add_argument('forest')
    tswd.add_argument('data')
    tswd.add_argument('--cohort-a', required=True)
    tswd.add_argument('--cohort-b', required=True)
    tswd.add_argument('--allow-overlap', action='store_true')
    tswd.add_argument('--per-tree', action='store_true', help='list the value of every tree')
    tswd.add_argument('--baseline', action='store_true', help='add the mean-imputation EMD baseline')
    tswd.add_argument('--plot', help='write a feature-importance bar chart')

    evaluate = sub.add_parser('eval', parents=[common], help='run an evaluation experiment')
    evaluate.add_argument('--experiment', required=True)
    evaluate.add_argument('--knob', help='ablation knob: trees, depth, split-vars, mnar-levels, entropy-dims')
    evaluate.add_argument('--values', help='comma-separated knob values (default: the standard sweep)')
    evaluate.add_argument('--seeds', type=_int_list)
    evaluate.add_argument('--n', type=int, help='Swiss roll size')
    evaluate.add_argument('--plot', help='write a precision-at-k plot')

    cluster = sub.add_parser('cluster', parents=[common], help='spectral clustering with silhouette')
    cluster.add_argument('input', help='forest file or distance matrix file')
    cluster.add_argument('--data', help='CSV to route through the forest')

    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < command-line flags"""
    config = load_configuration(args.config)
    data = config.to_dict()
    data['output'] = {'dir': args.out or config.output_dir, 'format': args.format or config.matrix_format}

    for flag, name in FOREST_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            data['forest'][name] = value
    if args.bandwidth is not None:
        data['affinity']['bandwidth'] = args.bandwidth
    if args.k is not None:
        data['cluster']['k'] = args.k
    if getattr(args, 'seeds', None):
        data['eval']['seeds'] = args.seeds
    if getattr(args, 'n', None) is not None:
        data['eval']['n'] = args.n
    return RunConfig.from_dict(data)


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format='%(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )


def _parse_values(text: Optional[str]):
    if not text:
        return None
    values = []
    for item in text.split(','):
        item = item.strip()
        values.append(int(item) if item.lstrip('-').isdigit() else item)
    return values


def dispatch(args: argparse.Namespace) -> None:
    from cli.commands import cmd_cluster, cmd_dist, cmd_eval, cmd_fit, cmd_tswd

    config = resolve_config(args)
    n_jobs = args.threads if args.threads is not None else default_threads()
    if n_jobs == 0 or n_jobs < -1:
        raise ConfigError("--threads must be positive or -1")
    out = config.output_dir

    if args.command == 'fit':
        cmd_fit(args.data, args.schema, config, out, n_jobs=n_jobs, check=args.check)
    elif args.command == 'dist':
        cmd_dist(args.forest, args.data, config, out, with_affinity=args.affinity, n_jobs=n_jobs)
    elif args.command == 'tswd':
        cmd_tswd(
            args.forest, args.data, args.cohort_a, args.cohort_b, config, out,
            allow_overlap=args.allow_overlap, per_tree=args.per_tree,
            plot=args.plot, baseline=args.baseline, n_jobs=n_jobs,
        )
    elif args.command == 'eval':
        cmd_eval(
            args.experiment, config, out,
            knob=args.knob, values=_parse_values(args.values), plot=args.plot, n_jobs=n_jobs,
        )
    elif args.command == 'cluster':
        cmd_cluster(args.input, config, out, data_path=args.data, n_jobs=n_jobs)


def _one_line(e: BaseException) -> str:
    return " ".join(str(e).split())


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand

    Returns:
        0 on success, 1 for input/user errors, 2 for internal invariant violations
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        dispatch(args)
    except (InvariantError, AssertionError) as e:
        print(f"error: invariant: {_one_line(e)}", file=sys.stderr)
        return EXIT_INVARIANT
    except MuralError as e:
        print(f"error: {e.code}: {_one_line(e)}", file=sys.stderr)
        return EXIT_USER_ERROR
    except OSError as e:
        print(f"error: io: {_one_line(e)}", file=sys.stderr)
        return EXIT_USER_ERROR
    except KeyboardInterrupt:
        print("\n\nInterrupted by user", file=sys.stderr)
        return EXIT_USER_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
