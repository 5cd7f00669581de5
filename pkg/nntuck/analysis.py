#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
A module of interpretive transformations of fitted models and data:
the relative cognitive space, consensus and locally aggregated
structures, and proportional memberships.
"""

import logging

import numpy as np
from scipy.linalg import qr, solve, svdvals
from scipy.optimize import linear_sum_assignment

from .decomposition.models import NNTuckModel, reconstruct
from .exceptions import ArgumentError
from .tensor import as_tensor, mode_product, tensor_to_dict

# Smallest singular value of a usable basis
RANK_TOLERANCE = 1e-8


class RelativeSpace:
    """A model rewritten so that C chosen layers are the coordinate axes

    ``Y_star = Y B^-1`` and ``G_star = G x_3 B`` where ``B`` stacks the rows
    of ``Y`` at ``basis_layers``.  Entries of ``Y_star`` may be negative.
    """
    def __init__(self, model, basis_layers, B, Y_star, G_star):
        self.model = model
        self.basis_layers = [int(l) for l in basis_layers]
        self.B = B
        self.Y_star = Y_star
        self.G_star = G_star

    @property
    def negative_entries(self):
        """The number of negative entries of Y_star"""
        return int(np.sum(self.Y_star < 0))

    def reconstruct(self):
        """The rate tensor from U, V, Y_star and G_star"""
        return relative_reconstruct(self)

    def to_dict(self):
        """JSON-ready representation"""
        return {'basis_layers': self.basis_layers,
                'B': self.B.tolist(),
                'Y_star': self.Y_star.tolist(),
                'G_star': tensor_to_dict(self.G_star),
                'negative_entries': self.negative_entries}


def _volume(Y, rows):
    """|det| of the selected rows"""
    return abs(np.linalg.det(Y[list(rows)]))


def select_basis_layers(Y):
    """Choose C layers whose rows of Y span the largest volume

    A column-pivoted QR of ``Y^T`` gives a greedy selection, which is then
    improved by single swaps until no swap increases ``|det B|``.

    Parameters
    ----------
    Y: array-like
        The L x C layer memberships

    Returns
    -------
    list
        C row indices of Y
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ArgumentError('Y must be a matrix, got shape {}'.format(Y.shape))

    L, C = Y.shape
    if C > L:
        raise ArgumentError('Cannot pick {} basis layers out of {}'.format(C, L))

    if C == 1:
        return [int(np.argmax(np.linalg.norm(Y, axis=1)))]

    _, _, pivots = qr(Y.T, mode='economic', pivoting=True)
    selected = [int(p) for p in pivots[:C]]

    volume = _volume(Y, selected)
    improved = True
    while improved:
        improved = False
        for position in range(C):
            for candidate in range(L):
                if candidate in selected:
                    continue
                trial = list(selected)
                trial[position] = candidate
                trial_volume = _volume(Y, trial)
                if trial_volume > volume * (1. + 1e-12):
                    selected, volume, improved = trial, trial_volume, True

    smallest = svdvals(Y[selected]).min()
    if smallest <= RANK_TOLERANCE:
        rank = int(np.sum(svdvals(Y) > RANK_TOLERANCE))
        raise ArgumentError('Y is rank deficient: numerical rank {} < C={}'.format(rank, C))

    return selected


def to_relative(model, basis='auto'):
    """Rewrite a model in the basis of C layers

    Parameters
    ----------
    model: NNTuckModel
        The fitted model
    basis: sequence, str
        C layer indices, or 'auto' for :func:`select_basis_layers`

    Returns
    -------
    RelativeSpace
        The rewritten layer memberships and core
    """
    basis = select_basis_layers(model.Y) if isinstance(basis, str) and basis == 'auto' else [int(l) for l in basis]

    if len(basis) != model.C or len(set(basis)) != model.C:
        raise ArgumentError('Need {} distinct basis layers, got {}'.format(model.C, basis))
    if min(basis) < 0 or max(basis) >= model.L:
        raise ArgumentError('Basis layers must lie in 0..{}'.format(model.L - 1))

    B = model.Y[basis]
    if svdvals(B).min() <= RANK_TOLERANCE:
        raise ArgumentError('The rows of Y at layers {} are singular'.format(basis))

    Y_star = solve(B.T, model.Y.T).T
    G_star = mode_product(model.G, B, 3)

    space = RelativeSpace(model, basis, B, Y_star, G_star)
    if space.negative_entries:
        logging.info('Relative layer memberships have {} negative entries'.format(space.negative_entries))

    return space


def relative_reconstruct(space):
    """``G_star x_1 U x_2 V x_3 Y_star``"""
    return reconstruct(NNTuckModel(space.model.U, space.model.V, space.Y_star, space.G_star))


def consensus(a):
    """The edges perceived by at least half of the layers

    Parameters
    ----------
    a: array-like
        The N x N x L tensor, a cell is an edge when positive

    Returns
    -------
    np.ndarray
        The N x N binary matrix, edge iff ``2 * count >= L``
    """
    a = as_tensor(a, 'data')
    counts = (a > 0).sum(axis=2)

    return (2 * counts >= a.shape[2]).astype(int)


def locally_aggregated(a):
    """The edges ``(i, j)`` reported by the sender's own layer ``i``

    Parameters
    ----------
    a: array-like
        The N x N x N tensor

    Returns
    -------
    np.ndarray
        The N x N binary matrix
    """
    a = as_tensor(a, 'data')
    N, _, L = a.shape
    if L != N:
        raise ArgumentError('A locally aggregated structure requires L=N, got N={} and L={}'.format(N, L))

    idx = np.arange(N)
    own = a[idx, :, idx]

    return (own > 0).astype(int)


def proportional_membership(M):
    """Normalize every nonzero row to sum to one

    Parameters
    ----------
    M: array-like
        A nonnegative membership matrix

    Returns
    -------
    tuple
        The row-stochastic matrix and a boolean flag per all-zero row
    """
    M = np.asarray(M, dtype=float)
    if (M < 0).any():
        raise ArgumentError('Memberships must be nonnegative')

    sums = M.sum(axis=1)
    zero_rows = sums == 0
    P = np.zeros_like(M)
    P[~zero_rows] = M[~zero_rows] / sums[~zero_rows, None]

    return P, zero_rows


def edge_list(matrix, labels=None):
    """The (source, target) pairs of a binary matrix in row-major order"""
    matrix = np.asarray(matrix)
    labels = labels if labels is not None else [str(i) for i in range(matrix.shape[0])]

    return [(labels[i], labels[j]) for i, j in zip(*np.nonzero(matrix))]


def recovered_fraction(memberships, blocks):
    """Share of nodes whose strongest membership matches their planted group

    Fitted groups are matched to planted groups by the assignment that
    maximizes agreement.

    Parameters
    ----------
    memberships: array-like
        The N x K fitted memberships
    blocks: sequence
        The planted group of every node

    Returns
    -------
    float
        The matched fraction of nodes
    """
    memberships = np.asarray(memberships, dtype=float)
    blocks = np.asarray(blocks, dtype=int)
    found = np.argmax(memberships, axis=1)

    size = max(memberships.shape[1], blocks.max() + 1)
    agreement = np.zeros((size, size))
    np.add.at(agreement, (found, blocks), 1)
    rows, cols = linear_sum_assignment(-agreement)

    return float(agreement[rows, cols].sum() / blocks.size)
