"""Classes to hold the estimation settings and the outcome of a fit
"""
import json
import os

import numpy as np

from ..exceptions import ArgumentError
from ..utils import get_config
from .models import SCA, ModelSpec, NNTuckModel

SCA_STRATEGIES = ('averaged-factors', 'naive', 'averaged-updates')


class FitConfig:
    """The settings of the multiplicative-updates estimator

    Values are taken from the packaged ``fit_config.json``, then from an
    optional JSON ``param_file`` and finally from keyword arguments.
    """
    def __init__(self, spec, param_file=None, **kwargs):
        """Initialize the configuration

        Parameters
        ----------
        spec: ModelSpec, str
            The model class, or its compact form e.g. 'dependent:3:2'
        param_file: str (optional)
            A JSON file of settings to override the packaged defaults

        Example
        -------
        cfg = FitConfig('dependent:3:3', restarts=5, seed=7)
        """
        self.spec = spec if isinstance(spec, ModelSpec) else ModelSpec.parse(spec)

        file_settings = {}
        if param_file is not None:
            if not os.path.isfile(param_file):
                raise ArgumentError('No configuration file at {}'.format(param_file))
            try:
                with open(param_file, encoding='utf-8') as json_data:
                    file_settings = json.load(json_data)
            except ValueError as exc:
                raise ArgumentError('Cannot read the configuration {}: {}'.format(param_file, exc)) from None
        overrides = {k: v for k, v in kwargs.items() if v is not None}

        settings = get_config()
        settings.update(file_settings)
        settings.update(overrides)

        # A configuration file may carry its own spec
        settings.pop('spec', None)

        # SCA runs default to more restarts unless told otherwise
        self.restarts_explicit = 'restarts' in file_settings or 'restarts' in overrides
        sca_restarts = settings.pop('sca_restarts', 50)
        if self.spec.regime == SCA and not self.restarts_explicit:
            settings['restarts'] = sca_restarts

        self.rel_tol = settings.pop('rel_tol')
        self.max_iters = settings.pop('max_iters')
        self.restarts = settings.pop('restarts')
        self.seed = settings.pop('seed', 0)
        self.sca_strategy = settings.pop('sca_strategy')
        self.init_scale = settings.pop('init_scale', None)
        self.denominator_floor = float(settings.pop('denominator_floor'))
        self.kl_epsilon = float(settings.pop('kl_epsilon'))
        self.include_diagonal = bool(settings.pop('include_diagonal', False))

        if settings:
            raise ArgumentError('Unknown fit settings: {}'.format(', '.join(sorted(settings))))

    @property
    def rel_tol(self):
        """Getter for the relative KL tolerance"""
        return self._rel_tol

    @rel_tol.setter
    def rel_tol(self, value):
        """Setter for the relative KL tolerance"""
        if not float(value) > 0:
            raise ArgumentError('rel_tol must be positive, got {}'.format(value))

        self._rel_tol = float(value)

    @property
    def max_iters(self):
        """Getter for the iteration cap"""
        return self._max_iters

    @max_iters.setter
    def max_iters(self, value):
        """Setter for the iteration cap"""
        if int(value) < 1:
            raise ArgumentError('max_iters must be at least 1, got {}'.format(value))

        self._max_iters = int(value)

    @property
    def restarts(self):
        """Getter for the number of random initializations"""
        return self._restarts

    @restarts.setter
    def restarts(self, value):
        """Setter for the number of random initializations"""
        if int(value) < 1:
            raise ArgumentError('restarts must be at least 1, got {}'.format(value))

        self._restarts = int(value)

    @property
    def seed(self):
        """Getter for the master seed"""
        return self._seed

    @seed.setter
    def seed(self, value):
        """Setter for the master seed"""
        if int(value) < 0:
            raise ArgumentError('seed must be unsigned, got {}'.format(value))

        self._seed = int(value)

    @property
    def sca_strategy(self):
        """Getter for the SCA update strategy"""
        return self._sca_strategy

    @sca_strategy.setter
    def sca_strategy(self, value):
        """Setter for the SCA update strategy"""
        if value not in SCA_STRATEGIES:
            raise ArgumentError("sca_strategy must be one of {}, got '{}'".format(', '.join(SCA_STRATEGIES), value))

        self._sca_strategy = value

    @property
    def init_scale(self):
        """Getter for the core initialization scale, None to match the data mean"""
        return self._init_scale

    @init_scale.setter
    def init_scale(self, value):
        """Setter for the core initialization scale"""
        if value is not None and not float(value) > 0:
            raise ArgumentError('init_scale must be positive, got {}'.format(value))

        self._init_scale = None if value is None else float(value)

    def replace(self, **kwargs):
        """A copy with some settings changed

        Returns
        -------
        FitConfig
            The new configuration
        """
        settings = self.to_dict()
        settings.pop('spec')

        # A default restart count follows the regime of the new spec
        if not self.restarts_explicit:
            settings.pop('restarts')
        settings.update(kwargs)
        spec = settings.pop('model_spec', self.spec)

        return FitConfig(spec, **settings)

    def to_dict(self):
        """JSON-ready representation"""
        return {'spec': self.spec.to_dict(),
                'rel_tol': self.rel_tol,
                'max_iters': self.max_iters,
                'restarts': self.restarts,
                'seed': self.seed,
                'sca_strategy': self.sca_strategy,
                'init_scale': self.init_scale,
                'denominator_floor': self.denominator_floor,
                'kl_epsilon': self.kl_epsilon,
                'include_diagonal': self.include_diagonal}

    @classmethod
    def from_dict(cls, data):
        """Inverse of :meth:`to_dict`"""
        data = dict(data)
        spec = ModelSpec.from_dict(data.pop('spec'))

        return cls(spec, **data)

    @classmethod
    def from_json(cls, path, spec=None):
        """Read a configuration written by :meth:`to_dict`, or a partial
        settings file when ``spec`` is given"""
        if spec is not None:
            return cls(spec, param_file=path)

        with open(path) as json_data:
            return cls.from_dict(json.load(json_data))

    def __repr__(self):
        return 'FitConfig({})'.format(self.to_dict())


class FitResult:
    """The outcome of one or more multiplicative-updates runs"""
    def __init__(self, model, spec, kl_trace, final_loglik, iterations, seed_used,
                 monotone=True, init_scale=None, flagged_iterations=None, restart_seeds=None,
                 restart_logliks=None, strategy=None):
        """Store the outcome

        Parameters
        ----------
        model: NNTuckModel
            The fitted model
        spec: ModelSpec
            Its class
        kl_trace: sequence
            The KL divergence at initialization and after every iteration
        final_loglik: float
            The masked Poisson log-likelihood of the returned model
        iterations: int
            The number of iterations run
        seed_used: int
            The seed of the run that produced ``model``
        monotone: bool
            Whether ``kl_trace`` never increased
        init_scale: float (optional)
            The core initialization scale, None for a warm start
        flagged_iterations: sequence (optional)
            Iterations at which a factor column was zeroed
        restart_seeds: sequence (optional)
            The seeds of every restart considered
        restart_logliks: sequence (optional)
            Their final log-likelihoods, None for failed restarts
        strategy: str (optional)
            The SCA update strategy
        """
        if len(kl_trace) == 0:
            raise ArgumentError('A FitResult needs a nonempty KL trace')

        self.model = model
        self.spec = spec
        self.kl_trace = [float(kl) for kl in kl_trace]
        self.final_loglik = float(final_loglik)
        self.iterations = int(iterations)
        self.seed_used = int(seed_used)
        self.monotone = bool(monotone)
        self.init_scale = None if init_scale is None else float(init_scale)
        self.flagged_iterations = list(flagged_iterations or [])
        self.restart_seeds = list(restart_seeds or [self.seed_used])
        self.restart_logliks = list(restart_logliks or [self.final_loglik])
        self.strategy = strategy

    @property
    def final_kl(self):
        """The KL divergence of the returned model"""
        return min(self.kl_trace) if self.strategy is not None else self.kl_trace[-1]

    def to_dict(self, include_model=True):
        """JSON-ready representation"""
        doc = {'spec': self.spec.to_dict(),
               'kl_trace': self.kl_trace,
               'final_kl': self.final_kl,
               'final_loglik': self.final_loglik,
               'iterations': self.iterations,
               'seed_used': self.seed_used,
               'monotone': self.monotone,
               'init_scale': self.init_scale,
               'flagged_iterations': self.flagged_iterations,
               'restart_seeds': self.restart_seeds,
               'restart_logliks': self.restart_logliks,
               'strategy': self.strategy}
        if include_model:
            doc['model'] = self.model.to_dict()

        return doc

    @classmethod
    def from_dict(cls, data):
        """Inverse of :meth:`to_dict` with ``include_model=True``"""
        return cls(NNTuckModel.from_dict(data['model']), ModelSpec.from_dict(data['spec']),
                   data['kl_trace'], data['final_loglik'], data['iterations'], data['seed_used'],
                   monotone=data['monotone'], init_scale=data['init_scale'],
                   flagged_iterations=data['flagged_iterations'], restart_seeds=data['restart_seeds'],
                   restart_logliks=data['restart_logliks'], strategy=data['strategy'])

    def __repr__(self):
        return 'FitResult({}, final_loglik={:.6g}, iterations={}, seed_used={})'.format(
            self.spec.label(), self.final_loglik, self.iterations, self.seed_used)


def is_monotone(kl_trace, slack=1e-9):
    """Check that consecutive KL values never rise by more than ``slack``"""
    deltas = np.diff(np.asarray(kl_trace, dtype=float))

    return bool(np.all(deltas <= slack))
