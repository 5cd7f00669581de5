#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
A module for choosing the constraint regime and the ranks K and C by
held-out link prediction.

Whole dyads (tubes) are held out, so no layer's copy of a test dyad is
ever seen in training.  Models are fit on the training tubes and the
reconstructed rates of the held-out cells are scored by AUC against the
presence of an edge.
"""

import json
import logging

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .decomposition.fitters import fit
from .decomposition.models import DEPENDENT, ModelSpec, param_count, reconstruct
from .exceptions import ArgumentError
from .tensor import as_mask, as_tensor
from .utils import canonical_json, derive_seed, make_rng

FOLD_MODES = ('balanced', 'iid')
SWEEP_COLUMNS = ['regime', 'K', 'C', 'mean_auc', 'std_auc', 'mean_train_loglik', 'param_count', 'defined_folds']


class FoldPlan:
    """A tubular b-fold partition of the off-diagonal dyads"""
    def __init__(self, assignment, L, b, seed, mode='balanced'):
        """Instantiate a FoldPlan

        Parameters
        ----------
        assignment: np.ndarray
            The N x N fold of every dyad, -1 on the diagonal
        L: int
            The number of layers
        b: int
            The number of folds
        seed: int
            The seed the assignment was drawn with
        mode: str
            'balanced' or 'iid'
        """
        self.assignment = np.asarray(assignment, dtype=int)
        self.L = int(L)
        self.b = int(b)
        self.seed = int(seed)
        self.mode = mode

    @property
    def N(self):
        """The number of nodes"""
        return self.assignment.shape[0]

    def test_mask(self, fold):
        """The tubes held out in one fold, as an N x N x L boolean mask"""
        return np.repeat((self.assignment == fold)[:, :, None], self.L, axis=2)

    def train_mask(self, fold):
        """The observed off-diagonal tubes outside one fold"""
        held = self.assignment == fold
        keep = (self.assignment >= 0) & ~held

        return np.repeat(keep[:, :, None], self.L, axis=2)

    @property
    def masks(self):
        """The b training masks"""
        return [self.train_mask(fold) for fold in range(self.b)]

    def fold_sizes(self):
        """The number of test tubes of every fold"""
        return [int(np.sum(self.assignment == fold)) for fold in range(self.b)]

    def to_dict(self):
        """JSON-ready representation"""
        return {'b': self.b, 'seed': self.seed, 'mode': self.mode, 'L': self.L,
                'assignment': self.assignment.tolist()}


def make_folds(N, L, b=5, seed=0, mode='balanced'):
    """Assign every off-diagonal dyad to one of b test folds

    Parameters
    ----------
    N: int
        The number of nodes
    L: int
        The number of layers
    b: int
        The number of folds, at least 2
    seed: int
        The seed of the assignment
    mode: str
        'balanced' for folds whose sizes differ by at most one, 'iid' for
        independent uniform draws

    Returns
    -------
    FoldPlan
        The partition
    """
    if int(b) < 2:
        raise ArgumentError('At least 2 folds are needed, got {}'.format(b))
    if int(N) < 2:
        raise ArgumentError('At least 2 nodes are needed, got {}'.format(N))
    if mode not in FOLD_MODES:
        raise ArgumentError("mode must be one of {}, got '{}'".format(', '.join(FOLD_MODES), mode))

    n_tubes = N * N - N
    if b > n_tubes:
        raise ArgumentError('{} folds exceed the {} off-diagonal dyads'.format(b, n_tubes))

    rng = make_rng(seed)
    if mode == 'balanced':
        folds = rng.permutation(np.arange(n_tubes) % b)
    else:
        folds = rng.integers(0, b, size=n_tubes)

    assignment = np.full((N, N), -1, dtype=int)
    assignment[~np.eye(N, dtype=bool)] = folds

    return FoldPlan(assignment, L, b, seed, mode)


def auc(scores, labels):
    """Area under the ROC curve from the Mann-Whitney rank statistic

    Tied scores count one half.

    Parameters
    ----------
    scores: sequence
        The predicted scores
    labels: sequence
        The binary labels

    Returns
    -------
    float or None
        The AUC, None when only one class is present
    """
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.shape != labels.shape:
        raise ArgumentError('Got {} scores but {} labels'.format(scores.size, labels.size))

    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None

    ranks = rankdata(scores)
    u_statistic = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.

    return float(u_statistic / (n_pos * n_neg))


class CVScore:
    """Held-out AUC of one model class across the folds of a plan"""
    def __init__(self, spec, folds):
        """Summarize per-fold results

        Parameters
        ----------
        spec: ModelSpec
            The model class
        folds: list
            One dict per fold with 'fold', 'auc', 'train_loglik' and 'n_test'
        """
        self.spec = spec
        self.folds = folds

        defined = [f['auc'] for f in folds if f['auc'] is not None]
        self.defined_folds = len(defined)
        self.mean_auc = float(np.mean(defined)) if defined else None
        self.std_auc = float(np.std(defined)) if defined else None
        self.mean_train_loglik = float(np.mean([f['train_loglik'] for f in folds]))

    def __iter__(self):
        return iter((self.mean_auc, self.std_auc, self.folds))

    def __repr__(self):
        return 'CVScore({}, mean_auc={}, std_auc={})'.format(self.spec.label(), self.mean_auc, self.std_auc)


def cv_score(a, spec, plan, cfg, mask=None):
    """Cross-validated link prediction AUC of one model class

    Parameters
    ----------
    a: array-like
        The N x N x L count tensor, edges are the positive cells
    spec: ModelSpec
        The model class
    plan: FoldPlan
        The folds
    cfg: nntuck.decomposition.parameters.FitConfig
        The fit settings; its spec is replaced by ``spec``
    mask: array-like (optional)
        Cells that were never observed, excluded from training and testing

    Returns
    -------
    CVScore
        Mean and standard deviation of the defined fold AUCs and the fold details
    """
    a = as_tensor(a, 'data')
    if a.shape != (plan.N, plan.N, plan.L):
        raise ArgumentError('Fold plan for {} does not fit data of shape {}'.format((plan.N, plan.N, plan.L), a.shape))
    available = as_mask(mask, a.shape)

    folds = []
    for fold in range(plan.b):
        fold_cfg = cfg.replace(model_spec=spec, seed=derive_seed(cfg.seed, fold))
        result = fit(a, plan.train_mask(fold) & available, fold_cfg)

        test = plan.test_mask(fold) & available
        score = auc(reconstruct(result.model)[test], a[test] > 0)
        if score is None:
            logging.warning('Fold {} of {} has a single class; its AUC is dropped'.format(fold, spec.label()))

        folds.append({'fold': fold, 'auc': score, 'train_loglik': result.final_loglik, 'n_test': int(test.sum())})

    return CVScore(spec, folds)


class SweepResult:
    """The cross-validation grid and the selected cell"""
    def __init__(self, rows, plan_info=None):
        """Pick the best cell of a populated grid

        Parameters
        ----------
        rows: list
            One dict per cell with the SWEEP_COLUMNS keys
        plan_info: dict (optional)
            The fold settings, kept for provenance
        """
        self.rows = rows
        self.plan_info = plan_info or {}

        self.chosen = None
        best = -np.inf
        for index, row in enumerate(rows):
            if row['mean_auc'] is not None and row['mean_auc'] > best:
                best, self.chosen = row['mean_auc'], index

        self.parsimonious = []
        if self.chosen is not None:
            top = rows[self.chosen]
            for index, row in enumerate(rows):
                if (row['mean_auc'] is not None and row['mean_auc'] >= top['mean_auc'] - top['std_auc']
                        and row['param_count'] < top['param_count']):
                    self.parsimonious.append(index)

    @property
    def chosen_row(self):
        """The cell with the highest mean AUC"""
        return None if self.chosen is None else self.rows[self.chosen]

    @property
    def note(self):
        """A sentence describing the choice and its cheaper competitors"""
        if self.chosen is None:
            return 'No cell has a defined AUC'

        top = self.chosen_row
        note = 'Chosen {} K={} C={} with mean AUC {:.4f} (std {:.4f})'.format(
            top['regime'], top['K'], top['C'], top['mean_auc'], top['std_auc'])
        if self.parsimonious:
            cells = ', '.join('{} K={} C={}'.format(self.rows[i]['regime'], self.rows[i]['K'], self.rows[i]['C'])
                              for i in self.parsimonious)
            note += '; within one std with fewer parameters: {}'.format(cells)

        return note

    def to_frame(self):
        """The grid as a pandas DataFrame with the documented columns"""
        return pd.DataFrame(self.rows, columns=SWEEP_COLUMNS)

    def to_csv(self, path):
        """Write one row per grid cell"""
        self.to_frame().to_csv(path, index=False, lineterminator='\n')

        return path

    def to_dict(self):
        """JSON-ready representation"""
        return {'grid': self.rows, 'chosen': self.chosen, 'parsimonious': self.parsimonious,
                'note': self.note, 'folds': self.plan_info}

    def to_json(self, path):
        """Write :meth:`to_dict`"""
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(canonical_json(self.to_dict()))

        return path

    @classmethod
    def from_json(cls, path):
        """Read a grid written by :meth:`to_json`"""
        with open(path, encoding='utf-8') as f:
            doc = json.load(f)

        return cls(doc['grid'], doc.get('folds'))


def grid_specs(regimes, K_range, C_range, N, L, symmetric=False):
    """The valid model classes of a sweep, sorted by (regime, K, C)

    Cells that cannot be fit to the data (K > N, C >= L for dependent
    models, SCA when L != N) are skipped with a log message.
    """
    specs = []
    for regime in sorted(set(r.lower() for r in regimes)):
        for K in sorted(set(K_range)):
            if regime == DEPENDENT:
                candidates = [ModelSpec(regime, K, C, symmetric) for C in sorted(set(C_range))]
            else:
                candidates = [ModelSpec(regime, K, None, symmetric)]

            for spec in candidates:
                try:
                    spec.check(N, L)
                except ArgumentError as exc:
                    logging.info('Skipping {}: {}'.format(spec.label(), exc))
                    continue
                specs.append(spec)

    return specs


def sweep(a, regimes, K_range, C_range, plan, cfg, mask=None, symmetric=False):
    """Cross-validate every (regime, K, C) cell of a grid

    Parameters
    ----------
    a: array-like
        The N x N x L count tensor
    regimes: sequence
        Regime names
    K_range: sequence
        Social group counts
    C_range: sequence
        Layer group counts, used by the dependent regime
    plan: FoldPlan
        The folds shared by every cell
    cfg: nntuck.decomposition.parameters.FitConfig
        The fit settings
    mask: array-like (optional)
        Cells that were never observed
    symmetric: bool
        Fit undirected models

    Returns
    -------
    SweepResult
        The grid in (regime, K, C) order and the selected cell
    """
    if not regimes or not K_range or not C_range:
        raise ArgumentError('Sweep ranges must be nonempty')

    a = as_tensor(a, 'data')
    N, L = a.shape[0], a.shape[2]

    rows = []
    for spec in grid_specs(regimes, K_range, C_range, N, L, symmetric):
        score = cv_score(a, spec, plan, cfg, mask)
        rows.append({'regime': spec.regime,
                     'K': spec.K,
                     'C': spec.layer_dim(L),
                     'mean_auc': score.mean_auc,
                     'std_auc': score.std_auc,
                     'mean_train_loglik': score.mean_train_loglik,
                     'param_count': param_count(spec, N, L),
                     'defined_folds': score.defined_folds})
        logging.info('Sweep cell {}: mean AUC {}'.format(spec.label(), score.mean_auc))

    if not rows:
        raise ArgumentError('No grid cell can be fit to data with N={} and L={}'.format(N, L))

    result = SweepResult(rows, plan.to_dict())
    logging.info(result.note)

    return result


def regime_curves(result):
    """Mean AUC against K for every regime (and C for dependent cells)

    Returns
    -------
    dict
        ``{label: (K values, mean AUCs, stds)}`` in grid order
    """
    curves = {}
    for row in result.rows:
        label = row['regime'] if row['regime'] != DEPENDENT else 'dependent C={}'.format(row['C'])
        ks, means, stds = curves.setdefault(label, ([], [], []))
        ks.append(row['K'])
        means.append(np.nan if row['mean_auc'] is None else row['mean_auc'])
        stds.append(np.nan if row['std_auc'] is None else row['std_auc'])

    return curves
