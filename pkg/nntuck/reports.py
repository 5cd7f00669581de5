#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
A module to write the results of fits, tests, sweeps and relative space
rewrites as JSON, CSV tables and static SVG figures.

File names only depend on what is in the bundle:

fit
    ``fit_result.json``, ``U.csv``, ``V.csv``, ``Y.csv``, ``core.csv`` and
    the heatmaps ``U.svg``, ``V.svg``, ``Y.svg``, ``core_c{c}.svg``, plus
    ``Y_star.svg`` for dependent fits whose layer memberships have full rank
relative
    ``Y_star.csv``, ``Y_star.svg``, ``core_star.csv``, ``core_star_c{c}.svg``
    and ``relative.json``
sweep
    ``sweep.csv``, ``sweep.json`` and ``sweep.svg``
test
    ``test_result.json``

Every heatmap cell is an SVG element with the id ``cell-<row>-<column>``.
"""

import logging
import os

import matplotlib
matplotlib.use('Agg')
from matplotlib import cm
from matplotlib.colors import Normalize
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle
import numpy as np
import pandas as pd

from .analysis import to_relative
from .decomposition.models import DEPENDENT
from .exceptions import ArgumentError
from .model_selection import regime_curves
from .utils import canonical_json

# Fixed salt so SVG element ids do not change between runs
matplotlib.rcParams['svg.hashsalt'] = 'nntuck'
SVG_METADATA = {'Date': None}


class ReportBundle:
    """The results to be written by :func:`save_report`"""
    def __init__(self, fit=None, relative=None, sweep=None, test=None, node_labels=None, layer_labels=None):
        """Collect results

        Parameters
        ----------
        fit: nntuck.decomposition.parameters.FitResult (optional)
            A fitted model
        relative: nntuck.analysis.RelativeSpace (optional)
            A relative space rewrite
        sweep: nntuck.model_selection.SweepResult (optional)
            A cross-validation grid
        test: nntuck.statistical_tests.TestResult (optional)
            A likelihood ratio test
        node_labels: sequence (optional)
            Row labels of U and V
        layer_labels: sequence (optional)
            Row labels of Y and Y_star
        """
        if all(item is None for item in (fit, relative, sweep, test)):
            raise ArgumentError('A report needs at least one result')

        self.fit = fit
        self.relative = relative
        self.sweep = sweep
        self.test = test
        self.node_labels = None if node_labels is None else list(node_labels)
        self.layer_labels = None if layer_labels is None else list(layer_labels)


def _write_text(path, text):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)


def write_matrix_csv(matrix, path, row_labels=None, prefix='group'):
    """Write a matrix with labelled rows and columns

    Parameters
    ----------
    matrix: array-like
        The matrix
    path: str
        The output file
    row_labels: sequence (optional)
        One label per row, the row index by default
    prefix: str
        Column names are '<prefix>_<index>'
    """
    matrix = np.asarray(matrix, dtype=float)
    rows = row_labels if row_labels is not None else [str(i) for i in range(matrix.shape[0])]
    frame = pd.DataFrame(matrix, index=pd.Index(rows, name='label'),
                         columns=['{}_{}'.format(prefix, j) for j in range(matrix.shape[1])])
    frame.to_csv(path, lineterminator='\n')

    return path


def write_core_csv(core, path):
    """Write a K x K x C core in long format (k, k_prime, c, value)"""
    core = np.asarray(core, dtype=float)
    k, k_prime, c = np.meshgrid(*[np.arange(n) for n in core.shape], indexing='ij')
    frame = pd.DataFrame({'k': k.ravel(), 'k_prime': k_prime.ravel(), 'c': c.ravel(), 'value': core.ravel()})
    frame.to_csv(path, index=False, lineterminator='\n')

    return path


def heatmap_svg(matrix, path, title='', row_labels=None, col_labels=None, cmap='viridis'):
    """Draw a matrix as a static SVG heatmap with one element per cell

    Parameters
    ----------
    matrix: array-like
        The matrix, may hold negative entries
    path: str
        The output file
    title: str
        The figure title
    row_labels: sequence (optional)
        Tick labels of the rows
    col_labels: sequence (optional)
        Tick labels of the columns
    cmap: str
        The matplotlib colormap name
    """
    matrix = np.asarray(matrix, dtype=float)
    n_rows, n_cols = matrix.shape
    vmin, vmax = float(matrix.min()), float(matrix.max())
    if vmax <= vmin:
        vmax = vmin + 1.
    norm = Normalize(vmin=vmin, vmax=vmax)
    colors = matplotlib.colormaps[cmap]

    fig = Figure(figsize=(1.5 + 0.4 * n_cols, 1. + 0.25 * n_rows))
    ax = fig.add_subplot(111)
    for i in range(n_rows):
        for j in range(n_cols):
            cell = Rectangle((j, i), 1, 1, facecolor=colors(norm(matrix[i, j])), edgecolor='none')
            cell.set_gid('cell-{}-{}'.format(i, j))
            ax.add_patch(cell)

    ax.set_xlim(0, n_cols)
    ax.set_ylim(n_rows, 0)
    ax.set_xticks(np.arange(n_cols) + 0.5)
    ax.set_xticklabels(col_labels if col_labels is not None else [str(j) for j in range(n_cols)], fontsize=6)
    ax.set_yticks(np.arange(n_rows) + 0.5)
    ax.set_yticklabels(row_labels if row_labels is not None else [str(i) for i in range(n_rows)], fontsize=6)
    ax.set_title(title, fontsize=8)
    fig.colorbar(cm.ScalarMappable(norm=norm, cmap=colors), ax=ax)

    fig.savefig(path, format='svg', metadata=SVG_METADATA)

    return path


def sweep_svg(result, path):
    """Mean held-out AUC against K, one line per regime"""
    fig = Figure(figsize=(5, 3.5))
    ax = fig.add_subplot(111)
    for label, (ks, means, stds) in sorted(regime_curves(result).items()):
        ax.errorbar(ks, means, yerr=stds, marker='o', capsize=2, label=label)

    ax.set_xlabel('K')
    ax.set_ylabel('mean test AUC')
    ax.legend(fontsize=6)

    fig.savefig(path, format='svg', metadata=SVG_METADATA)

    return path


def _fit_files(result, out_dir, node_labels, layer_labels):
    """Write the model of a FitResult"""
    model = result.model
    written = []

    doc = result.to_dict()
    doc['node_labels'] = node_labels
    doc['layer_labels'] = layer_labels
    path = os.path.join(out_dir, 'fit_result.json')
    _write_text(path, canonical_json(doc))
    written.append(path)

    for name, matrix, labels in (('U', model.U, node_labels), ('V', model.V, node_labels), ('Y', model.Y, layer_labels)):
        written.append(write_matrix_csv(matrix, os.path.join(out_dir, '{}.csv'.format(name)), labels))
        written.append(heatmap_svg(matrix, os.path.join(out_dir, '{}.svg'.format(name)), name, labels))

    written.append(write_core_csv(model.G, os.path.join(out_dir, 'core.csv')))
    for c in range(model.C):
        path = os.path.join(out_dir, 'core_c{}.svg'.format(c))
        written.append(heatmap_svg(model.G[:, :, c], path, 'core slice {}'.format(c)))

    # Dependent fits also show their layers relative to the auto basis
    if result.spec.regime == DEPENDENT:
        try:
            space = to_relative(model)
        except ArgumentError as exc:
            logging.warning('No relative layer heatmap: {}'.format(exc))
        else:
            path = os.path.join(out_dir, 'Y_star.svg')
            written.append(heatmap_svg(space.Y_star, path, 'Y*', layer_labels, cmap='coolwarm'))

    return written


def _relative_files(space, out_dir, layer_labels):
    """Write a RelativeSpace"""
    written = []

    doc = space.to_dict()
    doc['basis_labels'] = None if layer_labels is None else [layer_labels[l] for l in space.basis_layers]
    path = os.path.join(out_dir, 'relative.json')
    _write_text(path, canonical_json(doc))
    written.append(path)

    written.append(write_matrix_csv(space.Y_star, os.path.join(out_dir, 'Y_star.csv'), layer_labels, prefix='basis'))
    written.append(heatmap_svg(space.Y_star, os.path.join(out_dir, 'Y_star.svg'), 'Y*', layer_labels, cmap='coolwarm'))
    written.append(write_core_csv(space.G_star, os.path.join(out_dir, 'core_star.csv')))
    for c in range(space.G_star.shape[2]):
        path = os.path.join(out_dir, 'core_star_c{}.svg'.format(c))
        written.append(heatmap_svg(space.G_star[:, :, c], path, 'relative core slice {}'.format(c)))

    return written


def save_report(bundle, out_dir):
    """Write every result of a bundle

    Parameters
    ----------
    bundle: ReportBundle
        The results
    out_dir: str
        The output directory, created if needed

    Returns
    -------
    list
        The sorted paths of the files written
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise ArgumentError('Cannot create the report directory {}: {}'.format(out_dir, exc)) from None
    if not os.access(out_dir, os.W_OK):
        raise ArgumentError('The report directory {} is not writable'.format(out_dir))

    written = []
    if bundle.fit is not None:
        written += _fit_files(bundle.fit, out_dir, bundle.node_labels, bundle.layer_labels)

    if bundle.relative is not None:
        written += _relative_files(bundle.relative, out_dir, bundle.layer_labels)

    if bundle.sweep is not None:
        written.append(bundle.sweep.to_csv(os.path.join(out_dir, 'sweep.csv')))
        written.append(bundle.sweep.to_json(os.path.join(out_dir, 'sweep.json')))
        written.append(sweep_svg(bundle.sweep, os.path.join(out_dir, 'sweep.svg')))

    if bundle.test is not None:
        path = os.path.join(out_dir, 'test_result.json')
        _write_text(path, canonical_json(bundle.test.to_dict()))
        written.append(path)

    logging.info('Wrote {} report files to {}'.format(len(written), out_dir))

    return sorted(written)
