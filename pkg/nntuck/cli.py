#! /usr/bin/env python
"""Command line tool to fit, test, select and interpret nonnegative Tucker
models of multilayer networks and Cognitive Social Structures.

Every run writes its results and one ``manifest.json`` into the output
directory.  Exit codes are 0 on success, 2 for invalid arguments or input
files and 3 when estimation fails.  Set NNTUCK_WORKERS to fit restarts in
parallel.

Usage:
  nntuck fit --data=<path> [--out=<dir>] [--format=<fmt>] [--regime=<regime>] [--k=<K>] [--c=<C>] [--symmetric] [--restarts=<n>] [--seed=<seed>] [--sca-strategy=<name>] [--rel-tol=<tol>] [--max-iters=<n>] [--include-diagonal] [--config=<path>] [--log-dir=<dir>]
  nntuck sweep --data=<path> [--out=<dir>] [--format=<fmt>] [--regimes=<list>] [--k=<range>] [--c=<range>] [--folds=<b>] [--fold-mode=<mode>] [--symmetric] [--restarts=<n>] [--seed=<seed>] [--rel-tol=<tol>] [--max-iters=<n>] [--include-diagonal] [--config=<path>] [--log-dir=<dir>]
  nntuck test --data=<path> --null=<spec> --alt=<spec> [--out=<dir>] [--format=<fmt>] [--alpha=<a>] [--kind=<kind>] [--split-fraction=<f>] [--split-granularity=<g>] [--restarts=<n>] [--seed=<seed>] [--sca-strategy=<name>] [--rel-tol=<tol>] [--max-iters=<n>] [--include-diagonal] [--config=<path>] [--log-dir=<dir>]
  nntuck relative --model=<path> [--out=<dir>] [--basis=<basis>] [--log-dir=<dir>]
  nntuck consensus --data=<path> [--out=<dir>] [--format=<fmt>] [--las] [--log-dir=<dir>]
  nntuck simulate --spec=<path> [--out=<dir>] [--seed=<seed>] [--format=<fmt>] [--log-dir=<dir>]
  nntuck (-h | --help)
  nntuck --version

Options:
  -h --help                    Show this screen.
  --version                    Show version.
  --data=<path>                The dataset: a long-tsv file, a layer-matrices directory or a dense-json file.
  --format=<fmt>               The dataset format, inferred from the path when omitted.
  --out=<dir>                  The output directory [default: nntuck_output]
  --regime=<regime>            One of independent, dependent, redundant or sca [default: dependent]
  --k=<K>                      The number of social groups; a range like 1..6 or 1,2,4 for sweep [default: 2]
  --c=<C>                      The number of layer groups; a range for sweep [default: 2]
  --symmetric                  Fit undirected models with U = V and symmetric core slices.
  --restarts=<n>               The number of random initializations (config default 20, 50 for sca).
  --seed=<seed>                The master seed of every random draw.
  --sca-strategy=<name>        One of averaged-factors, naive or averaged-updates.
  --rel-tol=<tol>              The relative KL change that stops the updates.
  --max-iters=<n>              The iteration cap of each restart.
  --include-diagonal           Keep self-ties in the likelihood.
  --config=<path>              A JSON file of fit settings.
  --log-dir=<dir>              Also write a log file to this directory.
  --regimes=<list>             Comma separated regimes to sweep [default: dependent,independent,redundant]
  --folds=<b>                  The number of tubular cross-validation folds [default: 5]
  --fold-mode=<mode>           balanced or iid fold assignment [default: balanced]
  --null=<spec>                The null model, e.g. redundant:3
  --alt=<spec>                 The alternative model, e.g. dependent:3:2
  --alpha=<a>                  The significance level [default: 0.05]
  --kind=<kind>                standard-lrt or split-lrt [default: standard-lrt]
  --split-fraction=<f>         The share of cells used to fit the alternative [default: 0.5]
  --split-granularity=<g>      entry or tube [default: entry]
  --model=<path>               A model.json written by the fit command.
  --basis=<basis>              auto, or comma separated layer indices or labels [default: auto]
  --las                        Write the locally aggregated structure instead of the consensus.
  --spec=<path>                A planted scenario JSON file.
"""

import json
import logging
import os
import sys
import time

from docopt import DocoptExit, docopt

from . import css_io
from .analysis import consensus, locally_aggregated, to_relative
from .decomposition.fitters import fit
from .decomposition.models import DEPENDENT, ModelSpec, load_model, save_model
from .decomposition.parameters import FitConfig
from .decomposition.simulations import PlantedScenario, write_dataset
from .exceptions import ArgumentError, EstimationError, ParseError
from .model_selection import make_folds, sweep
from .reports import ReportBundle, save_report
from .statistical_tests import TestSpec, run_test
from .utils import canonical_json, config_hash, configure_logging, file_digest

COMMANDS = ('fit', 'sweep', 'test', 'relative', 'consensus', 'simulate')


def parse_range(text):
    """Parse '1..6', '1,2,4' or '3' into a sorted list of integers"""
    try:
        if '..' in text:
            low, high = text.split('..')
            values = list(range(int(low), int(high) + 1))
        else:
            values = [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ArgumentError("Cannot parse the range '{}'".format(text)) from None

    if not values:
        raise ArgumentError("The range '{}' is empty".format(text))

    return sorted(set(values))


def _int(args, key):
    """An optional integer flag"""
    value = args.get(key)
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        raise ArgumentError('{} expects an integer, got {}'.format(key, value)) from None


def _float(args, key):
    """An optional float flag"""
    value = args.get(key)
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        raise ArgumentError('{} expects a number, got {}'.format(key, value)) from None


def _fit_config(args, spec):
    """The FitConfig of the shared fit flags"""
    return FitConfig(spec, param_file=args.get('--config'),
                     restarts=_int(args, '--restarts'),
                     seed=_int(args, '--seed'),
                     sca_strategy=args.get('--sca-strategy'),
                     rel_tol=_float(args, '--rel-tol'),
                     max_iters=_int(args, '--max-iters'),
                     include_diagonal=True if args.get('--include-diagonal') else None)


def _load(args):
    """The dataset of the --data flag"""
    return css_io.load(args['--data'], args.get('--format'))


class RunManifest:
    """The provenance record written once per command"""
    def __init__(self, command, settings, seed):
        self.command = command
        self.settings = settings
        self.seed = seed
        self.inputs = {}
        self.outputs = []
        self.extra = {}
        self.start = time.time()

    def add_input(self, path):
        self.inputs[os.path.basename(os.path.normpath(path))] = file_digest(path)

    def write(self, out_dir):
        """Write manifest.json with the digests of every output"""
        root = os.path.abspath(out_dir)
        outputs = {}
        for path in sorted(set(self.outputs)):
            outputs[os.path.relpath(os.path.abspath(path), root)] = file_digest(path)

        doc = {'command': self.command,
               'config_hash': config_hash(self.settings),
               'settings': self.settings,
               'seed': self.seed,
               'input_digests': self.inputs,
               'outputs': outputs,
               'extra': self.extra,
               'wall_time': round(time.time() - self.start, 3)}

        path = os.path.join(out_dir, 'manifest.json')
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(canonical_json(doc))

        return path


def cmd_fit(args, out_dir):
    """Fit one model class and write the model and its report"""
    dataset = _load(args)
    regime = args['--regime']
    c = _int(args, '--c') if regime.lower() == DEPENDENT else None
    spec = ModelSpec(regime, _int(args, '--k'), c, args['--symmetric'])
    cfg = _fit_config(args, spec)

    manifest = RunManifest('fit', cfg.to_dict(), cfg.seed)
    manifest.add_input(args['--data'])

    result = fit(dataset.tensor, None, cfg)

    model_path = os.path.join(out_dir, 'model.json')
    save_model(model_path, result.model, spec, seed=cfg.seed, final_kl=result.final_kl,
               final_loglik=result.final_loglik, node_labels=dataset.node_labels,
               layer_labels=dataset.layer_labels)
    manifest.outputs.append(model_path)
    manifest.outputs += save_report(ReportBundle(fit=result, node_labels=dataset.node_labels,
                                                 layer_labels=dataset.layer_labels), out_dir)
    manifest.extra['restart_seeds'] = result.restart_seeds

    print('{}: log-likelihood {:.6f} after {} iterations (seed {})'.format(
        spec.label(), result.final_loglik, result.iterations, result.seed_used))

    return manifest


def cmd_sweep(args, out_dir):
    """Cross-validate a grid of model classes"""
    dataset = _load(args)
    regimes = [r.strip() for r in args['--regimes'].split(',') if r.strip()]
    K_range = parse_range(args['--k'])
    C_range = parse_range(args['--c'])
    b = _int(args, '--folds')

    # The model class is replaced for every grid cell
    cfg = _fit_config(args, ModelSpec('redundant', 1))

    settings = dict(cfg.to_dict(), regimes=regimes, K_range=K_range, C_range=C_range,
                    folds=b, fold_mode=args['--fold-mode'])
    settings.pop('spec')
    manifest = RunManifest('sweep', settings, cfg.seed)
    manifest.add_input(args['--data'])

    plan = make_folds(dataset.N, dataset.L, b, cfg.seed, args['--fold-mode'])
    result = sweep(dataset.tensor, regimes, K_range, C_range, plan, cfg, symmetric=args['--symmetric'])

    manifest.outputs += save_report(ReportBundle(sweep=result), out_dir)
    manifest.extra['chosen'] = result.chosen_row
    print(result.note)

    return manifest


def cmd_test(args, out_dir):
    """Run a likelihood ratio test between two nested model classes"""
    dataset = _load(args)
    spec = TestSpec(args['--null'], args['--alt'], _float(args, '--alpha'), args['--kind'],
                    _float(args, '--split-fraction'), args['--split-granularity'])
    cfg = _fit_config(args, spec.alt_spec)

    settings = dict(cfg.to_dict(), test=spec.to_dict())
    manifest = RunManifest('test', settings, cfg.seed)
    manifest.add_input(args['--data'])

    result = run_test(dataset.tensor, spec, cfg)

    manifest.outputs += save_report(ReportBundle(test=result), out_dir)
    manifest.extra['decision'] = result.decision
    if result.threshold is not None:
        print('threshold 1/alpha = {:g}'.format(result.threshold))
    print(result.decision_line())

    return manifest


def cmd_relative(args, out_dir):
    """Rewrite a fitted model in the basis of C layers"""
    try:
        model, spec, doc = load_model(args['--model'])
    except (KeyError, ValueError) as exc:
        raise ArgumentError('Cannot read the model {}: {}'.format(args['--model'], exc)) from None
    layer_labels = doc.get('layer_labels')

    basis = args['--basis']
    if basis != 'auto':
        indices = []
        for item in basis.split(','):
            item = item.strip()
            if layer_labels is not None and item in layer_labels:
                indices.append(layer_labels.index(item))
            else:
                try:
                    indices.append(int(item))
                except ValueError:
                    raise ArgumentError("Unknown basis layer '{}'".format(item)) from None
        basis = indices

    manifest = RunManifest('relative', {'basis': args['--basis']}, None)
    manifest.add_input(args['--model'])

    space = to_relative(model, basis)

    manifest.outputs += save_report(ReportBundle(relative=space, layer_labels=layer_labels), out_dir)
    manifest.extra['basis_layers'] = space.basis_layers
    if layer_labels is not None:
        manifest.extra['basis_labels'] = [layer_labels[l] for l in space.basis_layers]
    print('basis layers: {}'.format(', '.join(str(l) for l in space.basis_layers)))

    return manifest


def cmd_consensus(args, out_dir):
    """Write the consensus or locally aggregated structure as an edge list"""
    dataset = _load(args)
    manifest = RunManifest('consensus', {'las': bool(args['--las'])}, None)
    manifest.add_input(args['--data'])

    if args['--las']:
        matrix, name = locally_aggregated(dataset.tensor), 'las.tsv'
    else:
        matrix, name = consensus(dataset.tensor), 'consensus.tsv'

    manifest.outputs.append(css_io.write_edge_list(matrix, dataset.node_labels, os.path.join(out_dir, name)))
    manifest.extra['edges'] = int(matrix.sum())

    return manifest


def cmd_simulate(args, out_dir):
    """Sample a dataset from a planted scenario"""
    try:
        with open(args['--spec']) as json_data:
            doc = json.load(json_data)
    except ValueError as exc:
        raise ArgumentError('Cannot read the scenario {}: {}'.format(args['--spec'], exc)) from None

    seed = _int(args, '--seed')
    if seed is not None:
        doc['seed'] = seed
    try:
        scenario = PlantedScenario.from_dict(doc)
    except KeyError as exc:
        raise ArgumentError('The scenario {} misses the field {}'.format(args['--spec'], exc)) from None

    manifest = RunManifest('simulate', scenario.to_dict(), scenario.seed)
    manifest.add_input(args['--spec'])

    fmt = args.get('--format') or 'long-tsv'
    name = {'long-tsv': 'dataset.tsv', 'layer-matrices': 'dataset', 'dense-json': 'dataset.json'}.get(fmt)
    if name is None:
        raise ArgumentError("Unknown dataset format '{}'".format(fmt))

    tensor = scenario.sample()
    manifest.outputs += write_dataset(tensor, os.path.join(out_dir, name), scenario.seed, fmt,
                                      directed=not scenario.spec.symmetric)

    truth = os.path.join(out_dir, 'planted_model.json')
    save_model(truth, scenario.build_model(), scenario.spec, seed=scenario.seed)
    manifest.outputs.append(truth)

    return manifest


def _expand_outputs(paths):
    """Replace directories by the files below them"""
    files = []
    for path in paths:
        if os.path.isdir(path):
            for root, _, names in os.walk(path):
                files += [os.path.join(root, name) for name in names]
        else:
            files.append(path)

    return files


def main(argv=None):
    """Run one command and return its exit code

    Parameters
    ----------
    argv: sequence (optional)
        The arguments, ``sys.argv[1:]`` by default

    Returns
    -------
    int
        0 on success, 2 for invalid arguments, 3 for estimation failures
    """
    from . import __version__

    try:
        args = docopt(__doc__, argv=argv, version=__version__)
    except DocoptExit as exc:
        print(exc, file=sys.stderr)
        return 2

    configure_logging(args['--log-dir'])
    command = [name for name in COMMANDS if args.get(name)][0]
    out_dir = args['--out']

    try:
        os.makedirs(out_dir, exist_ok=True)
        handler = globals()['cmd_{}'.format(command)]
        manifest = handler(args, out_dir)
        manifest.outputs = _expand_outputs(manifest.outputs)
        manifest.write(out_dir)

    except (ArgumentError, ParseError) as exc:
        logging.error(str(exc))
        return 2

    except EstimationError as exc:
        logging.error(str(exc))
        return 3

    except OSError as exc:
        logging.error(str(exc))
        return 2

    return 0


if __name__ == '__main__':
    sys.exit(main())
