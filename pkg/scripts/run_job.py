"""
Runs one toolkit job described by an INI config file.
"""
import sys
import logging

from pathlib import Path
from argparse import Namespace

_this_file: Path = Path(__file__)
if (pkg_path := str(_this_file.parents[1])) not in sys.path:
    sys.path.append(pkg_path)

from src.cli import SCHEMAS, JobConfig, load_config, run
from src.errors import ConfigError

LEVELS: tuple[int, ...] = (logging.WARNING, logging.INFO, logging.DEBUG)

def main(namespace: Namespace) -> int:
    logging.basicConfig(
        level = LEVELS[min(namespace.verbose, len(LEVELS) - 1)],
        format = '%(asctime)s %(levelname)s %(name)s: %(message)s',
    )

    print("Loading job:")
    print(f"> Parsed: {namespace}")
    try:
        config: JobConfig = load_config(namespace.config, SCHEMAS)
        config = config.with_overrides(namespace)
    except ConfigError as e:
        print(f"> Invalid config: {e}")
        return e.exit_code

    return run(config, show_progress=namespace.progress)

if __name__ == '__main__':
    from argparse import ArgumentParser

    parser = ArgumentParser(
        'run_job',
        description = \
            'runs a henon-newhouse toolkit job from an INI config file'
    )
    parser.add_argument(
        '--config',
        required = True,
        help = 'path to the job config',
    )
    parser.add_argument(
        '--out',
        required = False,
        default = None,
        help = 'output directory; overrides [job] out',
    )
    parser.add_argument(
        '--precision',
        required = False,
        default = None,
        choices = ('double', 'extended'),
        help = 'scalar precision; overrides [job] precision',
    )
    parser.add_argument(
        '--threads',
        required = False,
        default = None,
        type = int,
        help = 'worker processes for scans; overrides [job] threads',
    )
    parser.add_argument(
        '--seed',
        required = False,
        default = None,
        type = int,
        help = 'random seed; overrides [job] seed',
    )
    parser.add_argument(
        '--progress',
        action = 'store_true',
        help = 'show progress bars',
    )
    parser.add_argument(
        '-v', '--verbose',
        action = 'count',
        default = 0,
        help = 'INFO with -v, DEBUG with -vv',
    )

    sys.exit(main(parser.parse_args()))
