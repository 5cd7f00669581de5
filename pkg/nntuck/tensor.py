#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
A module for dense third-order tensors: unfoldings, mode-n products and
the masked Poisson divergences every estimator in ``nntuck`` consumes.

Tensors are plain ``numpy.ndarray`` objects of shape ``(n1, n2, n3)``.
Unfoldings follow Kolda & Bader (2009): the mode-n fibers are the columns
and, among the remaining modes, the earlier one varies fastest.  Masks are
arrays of the same shape with 1 (observed / train) and 0 (held out).
"""

import numpy as np
from scipy.special import gammaln, xlogy

from .exceptions import ArgumentError

# Floor applied to a rate inside logarithms when the count is positive
KL_EPSILON = 1e-10


def as_tensor(values, name='tensor', nonnegative=True):
    """Validate and return a third-order float tensor

    Parameters
    ----------
    values: array-like
        The tensor entries
    name: str
        Name used in error messages
    nonnegative: bool
        Reject negative entries

    Returns
    -------
    np.ndarray
        A float64 array with three dimensions
    """
    tensor = np.asarray(values, dtype=float)

    if tensor.ndim != 3:
        raise ArgumentError('{} must have three modes, got shape {}'.format(name, tensor.shape))

    if tensor.size == 0:
        raise ArgumentError('{} must have positive dimensions, got {}'.format(name, tensor.shape))

    if nonnegative and (np.isnan(tensor).any() or (tensor < 0).any()):
        raise ArgumentError('{} must be nonnegative'.format(name))

    return tensor


def as_mask(mask, shape):
    """Validate a binary mask against the shape of the tensor it masks

    Parameters
    ----------
    mask: array-like, None
        The mask; ``None`` means every entry is observed
    shape: tuple
        The shape of the masked tensor

    Returns
    -------
    np.ndarray
        A boolean array
    """
    if mask is None:
        return np.ones(shape, dtype=bool)

    mask = np.asarray(mask)
    if mask.shape != tuple(shape):
        raise ArgumentError('Mask shape {} does not match tensor shape {}'.format(mask.shape, tuple(shape)))

    if not np.isin(mask, (0, 1)).all():
        raise ArgumentError('Mask entries must be 0 or 1')

    return mask.astype(bool)


def _check_mode(mode):
    """Map a 1-based mode onto the numpy axis"""
    if mode not in (1, 2, 3):
        raise ArgumentError('mode must be 1, 2 or 3, got {!r}'.format(mode))

    return mode - 1


def unfold(tensor, mode):
    """Matricize a tensor along one mode

    Parameters
    ----------
    tensor: array-like
        The (n1, n2, n3) tensor
    mode: int
        The mode, 1, 2 or 3

    Returns
    -------
    np.ndarray
        The (n_mode, product of the other dims) unfolding
    """
    axis = _check_mode(mode)
    tensor = np.asarray(tensor)
    if tensor.ndim != 3:
        raise ArgumentError('unfold expects a third-order tensor, got shape {}'.format(tensor.shape))

    return np.reshape(np.moveaxis(tensor, axis, 0), (tensor.shape[axis], -1), order='F')


def fold(matrix, mode, shape):
    """Inverse of :func:`unfold`

    Parameters
    ----------
    matrix: array-like
        The unfolding
    mode: int
        The mode it was unfolded along
    shape: tuple
        The shape of the folded tensor

    Returns
    -------
    np.ndarray
        The tensor of the given shape
    """
    axis = _check_mode(mode)
    shape = tuple(int(n) for n in shape)
    matrix = np.asarray(matrix)

    moved = (shape[axis],) + tuple(n for i, n in enumerate(shape) if i != axis)
    if matrix.shape != (moved[0], int(np.prod(moved[1:]))):
        raise ArgumentError('Cannot fold a {} matrix into shape {} along mode {}'.format(matrix.shape, shape, mode))

    return np.moveaxis(np.reshape(matrix, moved, order='F'), 0, axis)


def mode_product(tensor, matrix, mode):
    """Multiply a tensor by a matrix along one mode, ``tensor x_mode matrix``

    Parameters
    ----------
    tensor: array-like
        The (n1, n2, n3) tensor
    matrix: array-like
        A matrix whose column count equals ``tensor.shape[mode - 1]``
    mode: int
        The mode, 1, 2 or 3

    Returns
    -------
    np.ndarray
        The tensor with dimension ``mode`` replaced by the row count of
        ``matrix``
    """
    axis = _check_mode(mode)
    tensor = np.asarray(tensor, dtype=float)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))

    if matrix.ndim != 2 or matrix.shape[1] != tensor.shape[axis]:
        raise ArgumentError('Matrix of shape {} cannot multiply mode {} of a tensor of shape {}'.format(matrix.shape, mode, tensor.shape))

    return np.moveaxis(np.tensordot(matrix, tensor, axes=(1, axis)), 0, axis)


def multi_mode_product(tensor, matrices, skip=None):
    """Apply :func:`mode_product` along every mode in turn

    Parameters
    ----------
    tensor: array-like
        The core tensor
    matrices: sequence
        The three matrices for modes 1, 2 and 3
    skip: int (optional)
        A mode to leave untouched

    Returns
    -------
    np.ndarray
        The product tensor
    """
    result = np.asarray(tensor, dtype=float)
    for mode, matrix in enumerate(matrices, start=1):
        if mode != skip:
            result = mode_product(result, matrix, mode)

    return result


def _check_pair(a, ahat, mask):
    """Shared validation for the divergence functions"""
    a = as_tensor(a, 'data')
    ahat = as_tensor(ahat, 'reconstruction')
    if a.shape != ahat.shape:
        raise ArgumentError('Data shape {} does not match reconstruction shape {}'.format(a.shape, ahat.shape))

    return a, ahat, as_mask(mask, a.shape)


def kl_div(a, ahat, mask=None, eps=KL_EPSILON):
    """Generalized Kullback-Leibler divergence over the observed entries

    ``sum_observed a log(a / ahat) - a + ahat`` with ``0 log 0 = 0``; when
    ``a > 0`` the rate inside the logarithm is floored at ``eps``.

    Parameters
    ----------
    a: array-like
        The count tensor
    ahat: array-like
        The rate tensor
    mask: array-like (optional)
        The observation mask
    eps: float
        The rate floor inside logarithms

    Returns
    -------
    float
        The divergence, >= 0 up to rounding
    """
    a, ahat, mask = _check_pair(a, ahat, mask)
    a_obs, ahat_obs = a[mask], ahat[mask]

    terms = xlogy(a_obs, a_obs) - xlogy(a_obs, np.maximum(ahat_obs, eps)) - a_obs + ahat_obs

    return float(np.sum(terms))


def poisson_loglik(a, ahat, mask=None, eps=KL_EPSILON):
    """Poisson log-likelihood of the observed counts

    ``sum_observed a log(ahat) - ahat - log Gamma(a + 1)``, with the same
    rate floor as :func:`kl_div`.

    Parameters
    ----------
    a: array-like
        The count tensor
    ahat: array-like
        The rate tensor
    mask: array-like (optional)
        The observation mask
    eps: float
        The rate floor inside logarithms

    Returns
    -------
    float
        The log-likelihood
    """
    a, ahat, mask = _check_pair(a, ahat, mask)
    a_obs, ahat_obs = a[mask], ahat[mask]

    terms = xlogy(a_obs, np.maximum(ahat_obs, eps)) - ahat_obs - gammaln(a_obs + 1.)

    return float(np.sum(terms))


def saturated_loglik(a, mask=None):
    """The data-only term linking :func:`poisson_loglik` and :func:`kl_div`

    ``poisson_loglik = -kl_div + saturated_loglik`` for any rate tensor.
    """
    a = as_tensor(a, 'data')
    a_obs = a[as_mask(mask, a.shape)]

    return float(np.sum(xlogy(a_obs, a_obs) - a_obs - gammaln(a_obs + 1.)))


def structural_mask(shape, include_diagonal=False):
    """The mask of entries that carry information at all

    Self-ties ``(i, i, l)`` are excluded unless ``include_diagonal``;
    tensors whose first two modes differ have no diagonal.

    Parameters
    ----------
    shape: tuple
        The tensor shape
    include_diagonal: bool
        Keep the self-ties

    Returns
    -------
    np.ndarray
        A boolean mask
    """
    mask = np.ones(shape, dtype=bool)
    n1, n2, _ = shape
    if not include_diagonal and n1 == n2:
        idx = np.arange(n1)
        mask[idx, idx, :] = False

    return mask


def observed(mask, shape, include_diagonal=False):
    """Combine a user mask with the structural mask"""
    return as_mask(mask, shape) & structural_mask(shape, include_diagonal)


def is_tubular(mask):
    """Check that every dyad is either observed in all layers or in none

    Parameters
    ----------
    mask: array-like
        The mask

    Returns
    -------
    bool
        True when ``mask[i, j, k] == 0`` implies ``mask[i, j, l] == 0``
    """
    mask = np.asarray(mask, dtype=bool)

    return bool(np.all(mask.all(axis=2) == mask.any(axis=2)))


def tensor_to_dict(tensor):
    """Serialize a tensor to a JSON-ready dictionary

    The values are listed in row-major (C) order; floats keep their
    shortest round-trip representation so the round trip is bit exact.
    """
    tensor = np.asarray(tensor)

    return {'dims': [int(n) for n in tensor.shape],
            'values': np.ravel(tensor, order='C').tolist()}


def tensor_from_dict(data):
    """Inverse of :func:`tensor_to_dict`"""
    try:
        dims = tuple(int(n) for n in data['dims'])
        values = np.asarray(data['values'], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ArgumentError('Malformed tensor document: {}'.format(exc)) from None

    if len(dims) != 3 or values.size != int(np.prod(dims)):
        raise ArgumentError('Tensor document has dims {} but {} values'.format(list(dims), values.size))

    return values.reshape(dims, order='C')
