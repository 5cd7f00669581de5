#! /usr/bin/env python

"""Tests for the ``decomposition.fitters`` and ``decomposition.parameters``
modules.

Use
---

    These tests can be run via the command line (omit the ``-s`` to
    suppress verbose output to stdout):
    ::

        pytest -s test_fitters.py

    Set NNTUCK_SLOW_TESTS=1 to also run the Monte Carlo comparisons.
"""

import json
import os
import tempfile
import unittest

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from ..decomposition.fitters import fit, fit_once, fit_sca_once
from ..decomposition.models import ModelSpec, embed, reconstruct, validate
from ..decomposition.parameters import FitConfig, FitResult, is_monotone
from ..decomposition.simulations import PlantedScenario
from ..exceptions import ArgumentError, EstimationError
from ..tensor import kl_div, poisson_loglik, structural_mask
from ..utils import derive_seed, make_rng

SLOW = os.environ.get('NNTUCK_SLOW_TESTS', '') not in ('', '0')

MONOTONE_SPECS = ['independent:2', 'dependent:2:2', 'redundant:3', 'dependent:3:2:sym', 'redundant:2:sym',
                  'independent:2:sym']


def _counts(N, L, seed, lam=1.):
    """A random count tensor"""
    return make_rng(seed).poisson(lam, size=(N, N, L)).astype(float)


class TestFitConfig(unittest.TestCase):
    """Tests for the FitConfig class"""
    def test_defaults(self):
        """Packaged defaults are used when nothing overrides them"""
        cfg = FitConfig('dependent:3:2')
        self.assertEqual(cfg.rel_tol, 1e-6)
        self.assertEqual(cfg.max_iters, 2000)
        self.assertEqual(cfg.restarts, 20)
        self.assertEqual(cfg.sca_strategy, 'averaged-factors')
        self.assertIsNone(cfg.init_scale)
        self.assertFalse(cfg.include_diagonal)

    def test_sca_restarts(self):
        """SCA defaults to more restarts unless told otherwise"""
        self.assertEqual(FitConfig('sca:3').restarts, 50)
        self.assertEqual(FitConfig('sca:3', restarts=4).restarts, 4)

    def test_invalid(self):
        """Bad values and unknown keys raise ArgumentError"""
        self.assertRaises(ArgumentError, FitConfig, 'redundant:2', rel_tol=0)
        self.assertRaises(ArgumentError, FitConfig, 'redundant:2', restarts=0)
        self.assertRaises(ArgumentError, FitConfig, 'redundant:2', sca_strategy='greedy')
        self.assertRaises(ArgumentError, FitConfig, 'redundant:2', learning_rate=0.1)
        self.assertRaises(ArgumentError, FitConfig, 'redundant:2', param_file='/no/such/file.json')

    def test_param_file(self):
        """A settings file sits between the defaults and the keywords"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'settings.json')
            with open(path, 'w') as f:
                json.dump({'restarts': 7, 'max_iters': 30}, f)

            cfg = FitConfig('redundant:2', param_file=path, max_iters=40)

        self.assertEqual(cfg.restarts, 7)
        self.assertEqual(cfg.max_iters, 40)

    def test_replace_and_round_trip(self):
        """replace() swaps settings and to_dict() reads back"""
        cfg = FitConfig('redundant:2', seed=3, restarts=2)
        other = cfg.replace(model_spec=ModelSpec('dependent', 2, 2), seed=5)

        self.assertEqual(other.spec, ModelSpec('dependent', 2, 2))
        self.assertEqual(other.seed, 5)
        self.assertEqual(other.restarts, 2)
        self.assertEqual(FitConfig.from_dict(cfg.to_dict()).to_dict(), cfg.to_dict())

        # A default restart count follows the new regime
        default = FitConfig('dependent:2:2')
        self.assertEqual(default.replace(model_spec=ModelSpec('sca', 2), seed=1).restarts, 50)
        self.assertEqual(FitConfig('sca:2').replace(model_spec=ModelSpec('redundant', 2)).restarts, 20)
        self.assertEqual(default.replace(restarts=3).replace(model_spec=ModelSpec('sca', 2)).restarts, 3)


def test_is_monotone():
    """Rises above the slack break monotonicity"""
    assert is_monotone([3., 2., 2., 1.])
    assert is_monotone([3., 2., 2. + 1e-12])
    assert not is_monotone([3., 2., 2.5])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(MONOTONE_SPECS), st.integers(4, 9), st.integers(3, 6))
def test_updates_never_increase_kl(seed, text, N, L):
    """Every multiplicative iteration lowers the KL divergence"""
    spec = ModelSpec.parse(text)
    cfg = FitConfig(spec, max_iters=60, rel_tol=1e-12, restarts=1)
    a = _counts(N, L, seed)

    result = fit_once(a, None, cfg, seed)

    assert result.monotone
    assert np.all(np.diff(result.kl_trace) <= 1e-9)
    assert validate(result.model, spec, atol=1e-12) == []


def test_fit_once_reports_its_trace():
    """The trace starts at the initial KL and the loglik matches the model"""
    print('Testing a single run...')

    a = _counts(8, 4, 1, lam=2.)
    cfg = FitConfig('dependent:2:2', max_iters=50, restarts=1)
    result = fit_once(a, None, cfg, 11)

    assert isinstance(result, FitResult)
    assert len(result.kl_trace) == result.iterations + 1
    assert result.iterations <= 50
    assert result.seed_used == 11

    mask = structural_mask(a.shape)
    ahat = reconstruct(result.model)
    assert result.final_kl == pytest.approx(kl_div(a, ahat, mask), rel=1e-9)
    assert result.final_loglik == pytest.approx(poisson_loglik(a, ahat, mask), rel=1e-9)


def test_fit_once_is_deterministic():
    """The same seed gives bitwise identical models"""
    a = _counts(7, 3, 2)
    cfg = FitConfig('independent:2', max_iters=20)

    first = fit_once(a, None, cfg, 5)
    second = fit_once(a, None, cfg, 5)

    for name in 'UVYG':
        assert np.array_equal(getattr(first.model, name), getattr(second.model, name))
    assert first.kl_trace == second.kl_trace


def test_init_scale():
    """A configured scale bounds the initial core, otherwise the data mean sets it"""
    a = _counts(6, 3, 3, lam=4.)

    fixed = fit_once(a, None, FitConfig('redundant:2', max_iters=1, init_scale=0.5), 0)
    assert fixed.init_scale == 0.5

    matched = fit_once(a, None, FitConfig('redundant:2', max_iters=1), 0)
    assert matched.init_scale > 0


def test_exact_warm_start_stays_exact():
    """Starting from the generating model keeps the divergence at zero"""
    scenario = PlantedScenario(6, 4, 'dependent:2:2', within_rate=2., between_rate=0.5, seed=1)
    model = scenario.build_model()
    a = reconstruct(model)

    result = fit_once(a, None, FitConfig('dependent:2:2', max_iters=50), 0, initial=model)

    assert result.final_kl == pytest.approx(0., abs=1e-8)


def test_masked_entries_do_not_matter():
    """Changing held-out counts leaves the fit unchanged"""
    a = _counts(6, 3, 4)
    mask = np.ones(a.shape)
    mask[0, 1, :] = 0
    b = a.copy()
    b[0, 1, :] = 50.

    cfg = FitConfig('redundant:2', max_iters=15)
    first, second = fit_once(a, mask, cfg, 3), fit_once(b, mask, cfg, 3)

    assert np.array_equal(first.model.U, second.model.U)


@pytest.mark.parametrize('text', ['independent:2', 'redundant:2', 'dependent:2:2:sym', 'sca:2', 'sca:2:sym'])
def test_constraints_hold_at_every_iteration(text):
    """Every iterate satisfies its class constraints exactly, not only the last"""
    spec = ModelSpec.parse(text)
    a = _counts(6, 6, 12, lam=2.)
    violations = []
    seen = []

    def check(iteration, model):
        seen.append(iteration)
        violations.extend('{}: {}'.format(iteration, v) for v in validate(model, spec))

    result = fit_once(a, None, FitConfig(spec, max_iters=25, rel_tol=1e-12, restarts=1), 2, callback=check)

    assert seen == list(range(result.iterations + 1))
    assert violations == []


@pytest.mark.parametrize('text', ['dependent:2:2', 'sca:2'])
def test_masked_entries_never_reach_an_iterate(text):
    """Perturbing held-out counts leaves every iterate bit-identical"""
    a = _counts(5, 5, 13)
    mask = np.ones(a.shape)
    mask[1, 2, :] = 0
    mask[3, 0, 1] = 0
    b = a.copy()
    b[1, 2, :] = 40.
    b[3, 0, 1] = 7.

    cfg = FitConfig(text, max_iters=15, rel_tol=1e-12, restarts=1)
    histories = []
    for data in (a, b):
        history = []
        fit_once(data, mask, cfg, 3, callback=lambda iteration, model: history.append(model.copy()))
        histories.append(history)

    assert len(histories[0]) == len(histories[1])
    for first, second in zip(*histories):
        for name in 'UVYG':
            assert np.array_equal(getattr(first, name), getattr(second, name))


def test_rescaled_start_has_the_same_reconstruction():
    """Trading a factor of s between U and the core leaves iteration 0 unchanged"""
    model = PlantedScenario(6, 4, 'dependent:2:2', within_rate=2., between_rate=0.5, seed=1).build_model()
    scaled = model.copy()
    scaled.U = model.U * 3.
    scaled.G = model.G / 3.
    a = _counts(6, 4, 14)

    starts = []
    for initial in (model, scaled):
        result = fit_once(a, None, FitConfig('dependent:2:2', max_iters=2), 0, initial=initial,
                          callback=lambda iteration, m: starts.append(reconstruct(m)) if iteration == 0 else None)

        # Warm starts keep their own scale
        assert result.init_scale is None

    np.testing.assert_allclose(starts[0], starts[1], rtol=1e-12)


def test_independent_fit_is_at_least_as_good_as_dependent():
    """The independent class contains the dependent one, so its fit is no worse"""
    a = PlantedScenario(8, 5, 'dependent:2:2', within_rate=3., between_rate=0.5, seed=2).sample()
    dependent = fit(a, None, FitConfig('dependent:2:2', max_iters=200, restarts=3, seed=1))

    warm = embed(dependent.model, ModelSpec('independent', 2))
    independent = fit(a, None, FitConfig('independent:2', max_iters=200, restarts=3, seed=1), warm_starts=[warm])

    assert independent.final_kl <= dependent.final_kl * (1. + 1e-6)


def test_fit_picks_best_restart():
    """fit() keeps the highest log-likelihood of all restarts"""
    a = _counts(8, 4, 5, lam=2.)
    cfg = FitConfig('dependent:2:2', max_iters=40, restarts=4, seed=9)

    result = fit(a, None, cfg)

    assert result.restart_seeds == [derive_seed(9, r) for r in range(4)]
    assert result.final_loglik == max(result.restart_logliks)
    assert result.seed_used == result.restart_seeds[result.restart_logliks.index(result.final_loglik)]

    # More restarts from the same stream can only help
    single = fit(a, None, cfg.replace(restarts=1))
    assert result.final_loglik >= single.final_loglik


def test_fit_accepts_warm_starts():
    """Warm starts are extra candidates after the random restarts"""
    a = _counts(6, 3, 6)
    cfg = FitConfig('redundant:2', max_iters=30, restarts=2)
    warm = fit(a, None, cfg).model

    result = fit(a, None, cfg, warm_starts=[warm])

    assert len(result.restart_seeds) == 3
    assert len(result.restart_logliks) == 3


def test_fit_errors():
    """Malformed inputs raise before any work"""
    cfg = FitConfig('redundant:2', restarts=1)

    with pytest.raises(ArgumentError):
        fit(np.ones((3, 4, 2)), None, cfg)

    with pytest.raises(ArgumentError):
        fit(np.ones((3, 3, 2)), None, FitConfig('redundant:4', restarts=1))

    with pytest.raises(EstimationError):
        fit(np.ones((3, 3, 2)), np.zeros((3, 3, 2)), cfg)


def test_parallel_restarts_match_serial(monkeypatch):
    """NNTUCK_WORKERS only changes where restarts run"""
    a = _counts(6, 3, 7)
    cfg = FitConfig('redundant:2', max_iters=20, restarts=3, seed=1)

    monkeypatch.setenv('NNTUCK_WORKERS', '1')
    serial = fit(a, None, cfg)
    monkeypatch.setenv('NNTUCK_WORKERS', '2')
    parallel = fit(a, None, cfg)

    assert serial.restart_logliks == parallel.restart_logliks
    assert np.array_equal(serial.model.G, parallel.model.G)


@pytest.mark.parametrize('strategy', ['averaged-factors', 'naive', 'averaged-updates'])
def test_sca_ties_u_and_y(strategy):
    """Every SCA strategy returns U = Y exactly and the minimum of its trace"""
    a = _counts(6, 6, 8)
    cfg = FitConfig('sca:2', max_iters=40, restarts=1, sca_strategy=strategy)

    result = fit_sca_once(a, None, cfg, 4)

    assert np.array_equal(result.model.U, result.model.Y)
    assert result.strategy == strategy
    assert result.final_kl == min(result.kl_trace)
    assert kl_div(a, reconstruct(result.model), structural_mask(a.shape)) == pytest.approx(result.final_kl, rel=1e-9)


def test_fit_once_dispatches_sca():
    """SCA specs go through the SCA strategies"""
    a = _counts(5, 5, 9)
    result = fit_once(a, None, FitConfig('sca:2:sym', max_iters=10, restarts=1), 0)

    assert result.strategy == 'averaged-factors'
    assert np.array_equal(result.model.U, result.model.V)

    with pytest.raises(ArgumentError):
        fit_sca_once(a, None, FitConfig('redundant:2'), 0)


def test_fit_result_round_trip():
    """FitResult.to_dict() reads back"""
    a = _counts(5, 3, 10)
    result = fit_once(a, None, FitConfig('redundant:2', max_iters=5), 0)
    copy = FitResult.from_dict(json.loads(json.dumps(result.to_dict())))

    assert copy.kl_trace == result.kl_trace
    assert np.array_equal(copy.model.G, result.model.G)


@pytest.mark.skipif(not SLOW, reason='Monte Carlo comparison; set NNTUCK_SLOW_TESTS=1 to run.')
def test_averaged_factors_beats_naive():
    """Averaging the factors finds lower KL than alternating on most instances"""
    wins = 0
    for seed in range(20):
        a = PlantedScenario(12, 12, 'sca:3', 3., 0.3, seed).sample()
        kls = {}
        for strategy in ('averaged-factors', 'naive'):
            cfg = FitConfig('sca:3', restarts=5, max_iters=300, seed=seed, sca_strategy=strategy)
            kls[strategy] = fit(a, None, cfg).final_kl
        wins += kls['averaged-factors'] <= kls['naive']

    assert wins >= 12
