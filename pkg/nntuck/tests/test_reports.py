#! /usr/bin/env python

"""Tests for the ``reports`` module.

Use
---

    These tests can be run via the command line (omit the ``-s`` to
    suppress verbose output to stdout):
    ::

        pytest -s test_reports.py
"""

import json
import os

import numpy as np
import pandas as pd
import pytest

from .. import reports
from ..analysis import to_relative
from ..decomposition.fitters import fit_once
from ..decomposition.parameters import FitConfig
from ..decomposition.simulations import PlantedScenario
from ..exceptions import ArgumentError


@pytest.fixture(scope='module')
def fitted():
    """A quick dependent fit"""
    a = PlantedScenario(6, 4, 'dependent:2:2', within_rate=3., between_rate=0.3, seed=1).sample()
    return fit_once(a, None, FitConfig('dependent:2:2', max_iters=20), 0)


def test_fit_report_files(tmp_path, fitted):
    """A fit writes its JSON, tables and heatmaps"""
    print('Testing the fit report...')

    labels = ['n{}'.format(i) for i in range(6)]
    written = reports.save_report(reports.ReportBundle(fit=fitted, node_labels=labels), str(tmp_path))
    names = sorted(os.path.basename(p) for p in written)

    assert names == sorted(['fit_result.json', 'U.csv', 'U.svg', 'V.csv', 'V.svg', 'Y.csv', 'Y.svg',
                            'core.csv', 'core_c0.svg', 'core_c1.svg', 'Y_star.svg'])
    assert written == sorted(written)

    frame = pd.read_csv(str(tmp_path / 'U.csv'), index_col=0)
    assert list(frame.index) == labels
    assert list(frame.columns) == ['group_0', 'group_1']
    assert np.allclose(frame.values, fitted.model.U)

    core = pd.read_csv(str(tmp_path / 'core.csv'))
    assert list(core.columns) == ['k', 'k_prime', 'c', 'value']
    assert len(core) == 8

    with open(str(tmp_path / 'fit_result.json')) as f:
        doc = json.load(f)
    assert doc['node_labels'] == labels
    assert doc['final_loglik'] == fitted.final_loglik


def test_heatmap_cells_are_addressable(tmp_path):
    """Every cell of a heatmap is an SVG element with a stable id"""
    path = reports.heatmap_svg(np.array([[1., -2.], [0., 3.]]), str(tmp_path / 'm.svg'), 'title')

    with open(path) as f:
        svg = f.read()

    for i in range(2):
        for j in range(2):
            assert 'id="cell-{}-{}"'.format(i, j) in svg


def test_reports_are_reproducible(tmp_path, fitted):
    """Writing the same results twice gives identical bytes"""
    first, second = tmp_path / 'a', tmp_path / 'b'
    for out in (first, second):
        reports.save_report(reports.ReportBundle(fit=fitted), str(out))

    for name in ('fit_result.json', 'U.csv', 'core_c0.svg'):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_relative_report(tmp_path, fitted):
    """Relative space reports carry the basis and the rewritten core"""
    space = to_relative(fitted.model)
    written = reports.save_report(reports.ReportBundle(relative=space, layer_labels=['a', 'b', 'c', 'd']), str(tmp_path))
    names = {os.path.basename(p) for p in written}

    assert {'relative.json', 'Y_star.csv', 'Y_star.svg', 'core_star.csv'} <= names

    with open(str(tmp_path / 'relative.json')) as f:
        doc = json.load(f)
    assert doc['basis_layers'] == space.basis_layers
    assert doc['basis_labels'] == [['a', 'b', 'c', 'd'][l] for l in space.basis_layers]


def test_empty_bundle():
    """A report needs something to write"""
    with pytest.raises(ArgumentError):
        reports.ReportBundle()
