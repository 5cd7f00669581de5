"""Functions used to fit nonnegative Tucker models to network tensors
by minimizing the masked KL divergence with multiplicative updates
"""
from functools import partial
import logging
import multiprocessing
import time

import numpy as np
from scipy.special import gammaln, xlogy

from ..exceptions import ArgumentError, EstimationError, NumericalError
from ..tensor import as_tensor, multi_mode_product, observed, unfold
from ..utils import derive_seed, get_env_variables, make_rng
from .models import DEPENDENT, SCA, random_model, validate
from .parameters import FitResult, is_monotone


class _Workspace:
    """The masked data and the current reconstruction of one run"""
    def __init__(self, a, mask, cfg):
        self.a = np.where(mask, a, 0.)
        self.mask = mask.astype(float)
        self.eps = cfg.kl_epsilon
        self.floor = cfg.denominator_floor
        self.n_observed = int(mask.sum())

        # Data-only part of the divergence
        self.kl_const = float(np.sum(xlogy(self.a, self.a) - self.a))

        # The mask unfoldings never change
        self.mask_unfolded = {mode: unfold(self.mask, mode) for mode in (1, 2, 3)}

        self.model = None
        self.ahat = None
        self.ratio = None

    def refresh(self):
        """Recompute the reconstruction after a factor changed"""
        self.ahat = multi_mode_product(self.model.G, self.model.factors)
        self.ratio = self.mask * self.a / np.maximum(self.ahat, self.eps)

    def kl(self):
        """The masked generalized KL divergence of the current model"""
        log_term = np.sum(xlogy(self.a, np.maximum(self.ahat, self.eps)))

        return self.kl_const - float(log_term) + float(np.sum(self.mask * self.ahat))

    def factor_terms(self, mode):
        """Numerator and denominator of the update of one factor matrix"""
        others = unfold(multi_mode_product(self.model.G, self.model.factors, skip=mode), mode).T
        numerator = unfold(self.ratio, mode) @ others
        denominator = self.mask_unfolded[mode] @ others

        return numerator, denominator

    def core_terms(self):
        """Numerator and denominator of the core update"""
        transposed = [f.T for f in self.model.factors]
        numerator = multi_mode_product(self.ratio, transposed)
        denominator = multi_mode_product(self.mask, transposed)

        return numerator, denominator

    def multiplier(self, mode):
        """The multiplicative update of one factor matrix"""
        numerator, denominator = self.factor_terms(mode)

        return numerator / np.maximum(denominator, self.floor)

    def tied_multiplier(self):
        """The update of U when it is tied to V"""
        num_u, den_u = self.factor_terms(1)
        num_v, den_v = self.factor_terms(2)

        return np.sqrt((num_u + num_v) / np.maximum(den_u + den_v, self.floor))

    def update_core(self, symmetric):
        """Apply the core update, keeping frontal slices symmetric if asked"""
        numerator, denominator = self.core_terms()
        if symmetric:
            numerator = numerator + numerator.transpose(1, 0, 2)
            denominator = denominator + denominator.transpose(1, 0, 2)

        self.model.G = self.model.G * (numerator / np.maximum(denominator, self.floor))
        self.refresh()


def _prepare(a, mask, cfg):
    """Validate the inputs of a fit and build its workspace"""
    a = as_tensor(a, 'data')
    N1, N2, L = a.shape
    if N1 != N2:
        raise ArgumentError('Network tensors must be N x N x L, got {}'.format(a.shape))

    cfg.spec.check(N1, L)
    mask = observed(mask, a.shape, cfg.include_diagonal)
    if not mask.any():
        raise EstimationError('No observed entries to fit')

    return _Workspace(a, mask, cfg)


def _initialize(work, spec, rng, cfg, initial=None):
    """Draw the starting model and scale its core to the observed mean"""
    N, L = work.a.shape[0], work.a.shape[2]

    # Warm starts keep their own scale
    if initial is not None:
        work.model = initial.copy()
        work.refresh()
        return None

    if cfg.init_scale is not None:
        work.model = random_model(spec, N, L, rng, cfg.init_scale)
        work.refresh()
        return cfg.init_scale

    work.model = random_model(spec, N, L, rng)
    work.refresh()

    data_mean = work.a.sum() / work.n_observed
    model_mean = np.sum(work.mask * work.ahat) / work.n_observed
    scale = data_mean / model_mean if data_mean > 0 and model_mean > 0 else 1.

    work.model.G = work.model.G * scale
    work.refresh()

    return float(scale)


def _check_finite(model, iteration):
    """Raise a NumericalError if any factor went NaN or infinite"""
    for name, values in zip('UVYG', model.factors + [model.G]):
        if not np.isfinite(values).all():
            raise NumericalError('Non-finite entries in {} at iteration {}'.format(name, iteration), iteration)


def _converged(previous, current, rel_tol):
    """Relative change test of consecutive KL values"""
    if previous <= 0:
        return True

    return abs(previous - current) / previous < rel_tol


def _standard_step(work, spec):
    """One sweep of the U, V, Y and core updates"""
    model = work.model

    if spec.symmetric:
        model.U = model.U * work.tied_multiplier()
        model.V = model.U.copy()
        work.refresh()
    else:
        model.U = model.U * work.multiplier(1)
        work.refresh()
        model.V = model.V * work.multiplier(2)
        work.refresh()

    # Y is fixed for the independent and redundant regimes
    if spec.regime == DEPENDENT:
        model.Y = model.Y * work.multiplier(3)
        work.refresh()

    work.update_core(spec.symmetric)


def fit_once(a, mask, cfg, seed, initial=None, callback=None):
    """Run the multiplicative updates from one initialization

    SCA specs are passed on to :func:`fit_sca_once`.

    Parameters
    ----------
    a: array-like
        The N x N x L count tensor
    mask: array-like, None
        The observation mask, None when everything is observed
    cfg: nntuck.decomposition.parameters.FitConfig
        The estimation settings
    seed: int
        The seed of the initialization
    initial: NNTuckModel (optional)
        Start from this model instead of a random draw
    callback: callable (optional)
        Called as ``callback(iteration, model)`` with the initial model
        (iteration 0) and after every iteration.  The model is live and
        must not be modified

    Returns
    -------
    nntuck.decomposition.parameters.FitResult
        The fitted model and its KL trace
    """
    spec = cfg.spec
    if spec.regime == SCA:
        return fit_sca_once(a, mask, cfg, seed, initial, callback)

    work = _prepare(a, mask, cfg)
    init_scale = _initialize(work, spec, make_rng(seed), cfg, initial)

    kl_trace = [work.kl()]
    if callback is not None:
        callback(0, work.model)
    iteration = 0
    while iteration < cfg.max_iters:
        iteration += 1
        _standard_step(work, spec)
        _check_finite(work.model, iteration)
        kl_trace.append(work.kl())
        if callback is not None:
            callback(iteration, work.model)

        if _converged(kl_trace[-2], kl_trace[-1], cfg.rel_tol):
            break

    monotone = is_monotone(kl_trace)
    if not monotone:
        logging.warning('KL increased during a {} fit with seed {}'.format(spec.label(), seed))

    loglik = -kl_trace[-1] + _saturated(work)

    return FitResult(work.model, spec, kl_trace, loglik, iteration, seed,
                     monotone=monotone, init_scale=init_scale)


def _saturated(work):
    """The data-only term that turns a KL divergence into a log-likelihood"""
    return work.kl_const - float(np.sum(work.mask * gammaln(work.a + 1.)))


def _sca_step(work, spec, strategy):
    """One sweep of an SCA update strategy, which keeps U = Y on exit"""
    model = work.model

    if spec.symmetric:
        u_multiplier = work.tied_multiplier
    else:
        model.V = model.V * work.multiplier(2)
        work.refresh()

        def u_multiplier():
            return work.multiplier(1)

    def tie(values):
        model.U = values
        model.Y = values.copy()
        if spec.symmetric:
            model.V = values.copy()
        work.refresh()

    if strategy == 'averaged-factors':
        model.U = model.U * u_multiplier()
        work.refresh()
        model.Y = model.Y * work.multiplier(3)
        work.refresh()
        tie((model.U + model.Y) / 2.)

    elif strategy == 'naive':
        tie(model.U * u_multiplier())
        tie(model.Y * work.multiplier(3))

    else:
        tie(model.U * (u_multiplier() + work.multiplier(3)) / 2.)

    work.update_core(spec.symmetric)


def fit_sca_once(a, mask, cfg, seed, initial=None, callback=None):
    """Run one of the SCA update strategies from one initialization

    The trajectory need not be monotone, so the iterate with the smallest
    KL divergence is returned.

    Parameters
    ----------
    a: array-like
        The N x N x N count tensor
    mask: array-like, None
        The observation mask
    cfg: nntuck.decomposition.parameters.FitConfig
        The estimation settings, with an SCA spec
    seed: int
        The seed of the initialization
    initial: NNTuckModel (optional)
        Start from this model instead of a random draw
    callback: callable (optional)
        Called as ``callback(iteration, model)`` with the initial model
        (iteration 0) and after every iteration.  The model is live and
        must not be modified

    Returns
    -------
    nntuck.decomposition.parameters.FitResult
        The minimal-KL iterate and the full KL trace
    """
    spec = cfg.spec
    if spec.regime != SCA:
        raise ArgumentError('fit_sca_once needs an SCA spec, got {}'.format(spec.label()))

    work = _prepare(a, mask, cfg)
    init_scale = _initialize(work, spec, make_rng(seed), cfg, initial)

    kl_trace = [work.kl()]
    if callback is not None:
        callback(0, work.model)
    best_kl, best_model = kl_trace[0], work.model.copy()
    flagged = []
    iteration = 0
    while iteration < cfg.max_iters:
        iteration += 1
        _sca_step(work, spec, cfg.sca_strategy)
        _check_finite(work.model, iteration)
        kl_trace.append(work.kl())
        if callback is not None:
            callback(iteration, work.model)

        # Zeroed columns of the shared factor
        if (work.model.U.max(axis=0) < cfg.denominator_floor).any():
            flagged.append(iteration)
            logging.warning('A column of U=Y vanished at SCA iteration {} (seed {})'.format(iteration, seed))

        if kl_trace[-1] < best_kl:
            best_kl, best_model = kl_trace[-1], work.model.copy()

        if _converged(kl_trace[-2], kl_trace[-1], cfg.rel_tol):
            break

    loglik = -best_kl + _saturated(work)

    return FitResult(best_model, spec, kl_trace, loglik, iteration, seed,
                     monotone=is_monotone(kl_trace), init_scale=init_scale,
                     flagged_iterations=flagged, strategy=cfg.sca_strategy)


def _run_restart(task, a, mask, cfg):
    """Fit one restart, returning the error instead of raising it"""
    index, seed, initial = task
    start = time.time()
    try:
        result = fit_once(a, mask, cfg, seed, initial)
    except EstimationError as exc:
        logging.warning('Restart {} (seed {}) failed: {}'.format(index, seed, exc))
        return exc

    logging.info('Restart {} (seed {}) finished after {} iterations in {:.2f}s with KL {:.6g}'.format(
        index, seed, result.iterations, time.time() - start, result.final_kl))

    return result


def fit(a, mask, cfg, warm_starts=None):
    """Fit a model from several initializations and keep the best

    Restart ``r`` is seeded with ``derive_seed(cfg.seed, r)``; warm starts
    are considered after the random restarts.  The run with the highest
    masked log-likelihood wins and ties go to the lowest index.  Set the
    NNTUCK_WORKERS environment variable to run restarts in parallel.

    Parameters
    ----------
    a: array-like
        The N x N x L count tensor
    mask: array-like, None
        The observation mask
    cfg: nntuck.decomposition.parameters.FitConfig
        The estimation settings
    warm_starts: sequence (optional)
        Extra initial models to run alongside the random restarts

    Returns
    -------
    nntuck.decomposition.parameters.FitResult
        The best run, with the seeds and log-likelihoods of all runs
    """
    # Raise argument errors once rather than per restart
    _prepare(a, mask, cfg)
    a = np.asarray(a, dtype=float)

    tasks = [(r, derive_seed(cfg.seed, r), None) for r in range(cfg.restarts)]
    for w, initial in enumerate(warm_starts or []):
        index = cfg.restarts + w
        tasks.append((index, derive_seed(cfg.seed, index), initial))

    workers = get_env_variables()['workers']
    func = partial(_run_restart, a=a, mask=mask, cfg=cfg)
    if workers > 1 and len(tasks) > 1:
        pool = multiprocessing.Pool(min(workers, len(tasks)))
        results = pool.map(func, tasks)
        pool.close()
        pool.join()
    else:
        results = [func(task) for task in tasks]

    best = None
    for result in results:
        if isinstance(result, FitResult) and (best is None or result.final_loglik > best.final_loglik):
            best = result

    if best is None:
        raise EstimationError('All {} restarts of the {} fit failed'.format(len(tasks), cfg.spec.label())) from results[-1]

    best.restart_seeds = [task[1] for task in tasks]
    best.restart_logliks = [r.final_loglik if isinstance(r, FitResult) else None for r in results]

    violations = validate(best.model, cfg.spec)
    if violations:
        logging.warning('Fitted model violates its constraints: {}'.format('; '.join(violations)))

    return best
