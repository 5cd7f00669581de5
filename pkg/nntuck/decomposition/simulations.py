"""Functions to simulate multilayer networks from planted nonnegative
Tucker models
"""
import json
import logging

import numpy as np

from .. import css_io
from ..exceptions import ArgumentError
from ..tensor import as_tensor
from ..utils import RNG_ALGORITHM, derive_seed, make_rng
from .models import INDEPENDENT, REDUNDANT, SCA, ModelSpec, NNTuckModel, reconstruct, validate


def sample(model, seed):
    """Draw a count tensor with independent Poisson entries

    Parameters
    ----------
    model: NNTuckModel
        The generating model
    seed: int
        The seed of the Philox stream

    Returns
    -------
    np.ndarray
        An integer-valued N x N x L tensor
    """
    rates = reconstruct(model)

    return make_rng(seed).poisson(rates).astype(float)


def binarize(a):
    """Map positive entries to 1 and the rest to 0"""
    return (as_tensor(a, 'data') > 0).astype(float)


def one_hot(assignment, size):
    """Hard memberships as an indicator matrix"""
    assignment = np.asarray(assignment, dtype=int)
    matrix = np.zeros((assignment.size, size))
    matrix[np.arange(assignment.size), assignment] = 1.

    return matrix


def balanced_assignment(n, groups, rng):
    """Assign n items to groups with sizes differing by at most one"""
    return rng.permutation(np.arange(n) % groups)


class PlantedScenario:
    """A model with hard node and layer groups and a planted block pattern

    Core slice ``c`` links group ``k`` to group ``(c - k) mod K`` at
    ``within_rate`` and every other pair at ``between_rate``, so every
    slice is symmetric and distinct slices are distinct permutations.
    """
    def __init__(self, N, L, spec, within_rate=1., between_rate=0.2, seed=0,
                 node_blocks=None, layer_blocks=None):
        """Instantiate a scenario

        Parameters
        ----------
        N: int
            The number of nodes
        L: int
            The number of layers
        spec: ModelSpec, str
            The model class to plant
        within_rate: float
            The rate of the planted block pairs
        between_rate: float
            The rate of all other block pairs
        seed: int
            Seeds the group assignments and the sampled tensor
        node_blocks: sequence (optional)
            The social group of every node, balanced at random by default
        layer_blocks: sequence (optional)
            The layer group of every layer (dependent specs only)
        """
        self.spec = spec if isinstance(spec, ModelSpec) else ModelSpec.parse(spec)
        self.N = int(N)
        self.L = int(L)
        self.spec.check(self.N, self.L)

        if not within_rate >= between_rate >= 0:
            logging.warning('Planted scenario is not separated: within {} < between {}'.format(within_rate, between_rate))
        if between_rate < 0:
            raise ArgumentError('Rates must be nonnegative')

        self.within_rate = float(within_rate)
        self.between_rate = float(between_rate)
        self.seed = int(seed)

        rng = make_rng(derive_seed(self.seed, 0))
        K, C = self.spec.K, self.spec.layer_dim(self.L)
        self.node_blocks = np.asarray(node_blocks if node_blocks is not None else balanced_assignment(self.N, K, rng), dtype=int)

        if self.spec.regime == SCA:
            self.layer_blocks = self.node_blocks.copy()
        elif self.spec.regime == INDEPENDENT:
            self.layer_blocks = np.arange(self.L)
        elif self.spec.regime == REDUNDANT:
            self.layer_blocks = np.zeros(self.L, dtype=int)
        else:
            self.layer_blocks = np.asarray(layer_blocks if layer_blocks is not None else balanced_assignment(self.L, C, rng), dtype=int)

        if self.node_blocks.shape != (self.N,) or self.node_blocks.min() < 0 or self.node_blocks.max() >= K:
            raise ArgumentError('node_blocks must give one group in 0..{} per node'.format(K - 1))
        if self.layer_blocks.shape != (self.L,) or self.layer_blocks.min() < 0 or self.layer_blocks.max() >= C:
            raise ArgumentError('layer_blocks must give one group in 0..{} per layer'.format(C - 1))

    def core(self):
        """The K x K x C block rates"""
        K, C = self.spec.K, self.spec.layer_dim(self.L)
        G = np.full((K, K, C), self.between_rate)
        k = np.arange(K)
        for c in range(C):
            G[k, (c - k) % K, c] = self.within_rate

        return G

    def build_model(self):
        """The planted NNTuckModel"""
        K, C = self.spec.K, self.spec.layer_dim(self.L)
        U = one_hot(self.node_blocks, K)

        if self.spec.regime == INDEPENDENT:
            Y = np.eye(self.L)
        elif self.spec.regime == REDUNDANT:
            Y = np.ones((self.L, 1))
        else:
            Y = one_hot(self.layer_blocks, C)

        model = NNTuckModel(U, U.copy(), Y, self.core())

        violations = validate(model, self.spec)
        if violations:
            raise ArgumentError('Planted model violates its spec: {}'.format('; '.join(violations)))

        return model

    def sample(self):
        """A tensor drawn from the planted model, seeded by the scenario"""
        return sample(self.build_model(), derive_seed(self.seed, 1))

    def to_dict(self):
        """JSON-ready representation"""
        return {'N': self.N, 'L': self.L, 'spec': self.spec.to_dict(),
                'within_rate': self.within_rate, 'between_rate': self.between_rate,
                'seed': self.seed,
                'node_blocks': self.node_blocks.tolist(),
                'layer_blocks': self.layer_blocks.tolist()}

    @classmethod
    def from_dict(cls, data):
        """Build a scenario from a (possibly partial) JSON document"""
        spec = data['spec']
        spec = ModelSpec.parse(spec) if isinstance(spec, str) else ModelSpec.from_dict(spec)

        return cls(data['N'], data['L'], spec, data.get('within_rate', 1.), data.get('between_rate', 0.2),
                   data.get('seed', 0), data.get('node_blocks'), data.get('layer_blocks'))

    @classmethod
    def from_json(cls, path):
        """Read a scenario file"""
        with open(path) as json_data:
            return cls.from_dict(json.load(json_data))


def planted(N, L, spec, within_rate=1., between_rate=0.2, seed=0):
    """Build a planted scenario and draw one tensor from it

    Returns
    -------
    tuple
        The scenario, its model and the sampled tensor
    """
    scenario = PlantedScenario(N, L, spec, within_rate, between_rate, seed)

    return scenario, scenario.build_model(), scenario.sample()


def write_dataset(tensor, path, seed, fmt=None, directed=True, metadata=None):
    """Write a simulated tensor in any dataset format with its provenance

    Parameters
    ----------
    tensor: array-like
        The sampled count tensor
    path: str
        The output file or directory
    seed: int
        The seed it was drawn with
    fmt: str (optional)
        The dataset format, inferred from the path when omitted
    directed: bool
        The directed flag of the dataset
    metadata: dict (optional)
        Extra dataset metadata

    Returns
    -------
    list
        The paths written
    """
    provenance = {'generator': RNG_ALGORITHM, 'seed': str(int(seed))}
    meta = dict(provenance, **(metadata or {}))
    dataset = css_io.CssDataset(tensor, metadata=meta, directed=directed)

    return css_io.save(dataset, path, fmt, provenance=provenance)
