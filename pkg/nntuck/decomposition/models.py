"""Classes to handle nonnegative Tucker models of multilayer networks:
the constraint regimes, reconstruction and parameter accounting

A model holds outgoing memberships ``U`` (N x K), incoming memberships
``V`` (N x K), layer memberships ``Y`` (L x C) and the core ``G``
(K x K x C).  The expected adjacency tensor is
``G x_1 U x_2 V x_3 Y``.
"""
import copy
import json

import numpy as np

from ..exceptions import ArgumentError
from ..tensor import multi_mode_product, tensor_from_dict, tensor_to_dict
from ..utils import canonical_json

# Constraint regimes on the layer factor
INDEPENDENT = 'independent'
DEPENDENT = 'dependent'
REDUNDANT = 'redundant'
SCA = 'sca'
REGIMES = (DEPENDENT, INDEPENDENT, REDUNDANT, SCA)


class ModelSpec:
    """A constraint regime together with the latent dimensions"""
    def __init__(self, regime, K, C=None, symmetric=False):
        """Instantiate a ModelSpec

        Parameters
        ----------
        regime: str
            One of 'independent', 'dependent', 'redundant' or 'sca'
        K: int
            The number of social groups
        C: int (optional)
            The number of layer groups; required for 'dependent', forced
            to L, 1 and K for 'independent', 'redundant' and 'sca'
        symmetric: bool
            Constrain U = V and symmetric core slices (undirected networks)
        """
        self.regime = regime
        self.K = K
        self.symmetric = bool(symmetric)

        if self.regime == DEPENDENT:
            if C is None:
                raise ArgumentError('A dependent model requires C')
            C = int(C)
            if C < 1:
                raise ArgumentError('C must be a positive integer, got {}'.format(C))
        elif self.regime == SCA:
            if C is not None and int(C) != self.K:
                raise ArgumentError('SCA requires K = C, got K={} and C={}'.format(self.K, C))
            C = self.K
        elif self.regime == REDUNDANT:
            C = 1

        # Independent models resolve C = L against the data
        self._C = C

    @property
    def regime(self):
        """Getter for the regime"""
        return self._regime

    @regime.setter
    def regime(self, regime):
        """Setter for the regime

        Parameters
        ----------
        regime: str
            One of 'independent', 'dependent', 'redundant' or 'sca'
        """
        regime = str(regime).lower()
        if regime not in REGIMES:
            raise ArgumentError("regime must be one of {}, got '{}'".format(', '.join(REGIMES), regime))

        self._regime = regime

    @property
    def K(self):
        """Getter for K"""
        return self._K

    @K.setter
    def K(self, K):
        """Setter for K"""
        if int(K) != K or int(K) < 1:
            raise ArgumentError('K must be a positive integer, got {}'.format(K))

        self._K = int(K)

    @property
    def C(self):
        """The layer dimension, None for an unresolved independent spec"""
        return self._C

    def layer_dim(self, L):
        """Resolve C against the number of layers

        Parameters
        ----------
        L: int
            The number of layers

        Returns
        -------
        int
            C
        """
        return int(L) if self.regime == INDEPENDENT else self._C

    def check(self, N, L):
        """Raise if this model class cannot be fit to an N x N x L tensor

        Parameters
        ----------
        N: int
            The number of nodes
        L: int
            The number of layers
        """
        if self.K > N:
            raise ArgumentError('K={} exceeds the number of nodes N={}'.format(self.K, N))

        if self.regime == DEPENDENT and self.C >= L:
            raise ArgumentError('A dependent model requires C < L, got C={} and L={}'.format(self.C, L))

        if self.regime == SCA and L != N:
            raise ArgumentError('SCA requires L=N, got N={} and L={}'.format(N, L))

    def label(self):
        """A short human-readable label, e.g. 'dependent(K=3,C=2)'"""
        dims = 'K={}'.format(self.K)
        if self.regime == DEPENDENT:
            dims += ',C={}'.format(self.C)
        sym = ',symmetric' if self.symmetric else ''

        return '{}({}{})'.format(self.regime, dims, sym)

    def to_dict(self):
        """JSON-ready representation"""
        return {'regime': self.regime, 'K': self.K, 'C': self.C, 'symmetric': self.symmetric}

    @classmethod
    def from_dict(cls, data):
        """Inverse of :meth:`to_dict`"""
        return cls(data['regime'], data['K'], data.get('C'), data.get('symmetric', False))

    @classmethod
    def parse(cls, text):
        """Parse 'regime:K[:C][:sym]', e.g. 'dependent:3:2' or 'redundant:2:sym'

        Parameters
        ----------
        text: str
            The compact spec

        Returns
        -------
        ModelSpec
            The parsed spec
        """
        parts = [p.strip() for p in str(text).split(':') if p.strip()]
        symmetric = False
        if parts and parts[-1].lower() in ('sym', 'symmetric'):
            symmetric = True
            parts = parts[:-1]

        if len(parts) not in (2, 3):
            raise ArgumentError("Cannot parse model spec '{}', expected regime:K[:C][:sym]".format(text))

        try:
            K = int(parts[1])
            C = int(parts[2]) if len(parts) == 3 else None
        except ValueError:
            raise ArgumentError("Cannot parse model spec '{}': K and C must be integers".format(text)) from None

        return cls(parts[0], K, C, symmetric)

    def __eq__(self, other):
        return isinstance(other, ModelSpec) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.regime, self.K, self.C, self.symmetric))

    def __repr__(self):
        return 'ModelSpec({!r}, K={}, C={}, symmetric={})'.format(self.regime, self.K, self.C, self.symmetric)


class NNTuckModel:
    """The factor matrices and core of a nonnegative Tucker model"""
    def __init__(self, U, V, Y, G):
        """Instantiate a model

        Parameters
        ----------
        U: array-like
            The N x K outgoing memberships
        V: array-like
            The N x K incoming memberships
        Y: array-like
            The L x C layer memberships
        G: array-like
            The K x K x C core tensor
        """
        self.U = np.array(U, dtype=float, ndmin=2)
        self.V = np.array(V, dtype=float, ndmin=2)
        self.Y = np.array(Y, dtype=float, ndmin=2)
        self.G = np.array(G, dtype=float)

        if self.G.ndim != 3:
            raise ArgumentError('The core must have three modes, got shape {}'.format(self.G.shape))

        K1, K2, C = self.G.shape
        if self.U.shape[1] != K1 or self.V.shape[1] != K2 or self.Y.shape[1] != C:
            raise ArgumentError('Inconsistent dims: U {}, V {}, Y {}, G {}'.format(self.U.shape, self.V.shape, self.Y.shape, self.G.shape))

        if self.U.shape[0] != self.V.shape[0]:
            raise ArgumentError('U and V must have the same number of rows, got {} and {}'.format(self.U.shape[0], self.V.shape[0]))

    @property
    def N(self):
        """The number of nodes"""
        return self.U.shape[0]

    @property
    def K(self):
        """The number of social groups"""
        return self.U.shape[1]

    @property
    def L(self):
        """The number of layers"""
        return self.Y.shape[0]

    @property
    def C(self):
        """The number of layer groups"""
        return self.Y.shape[1]

    @property
    def factors(self):
        """The factor matrices in mode order"""
        return [self.U, self.V, self.Y]

    def copy(self):
        """A deep copy"""
        return copy.deepcopy(self)

    def reconstruct(self):
        """The expected adjacency tensor, see :func:`reconstruct`"""
        return reconstruct(self)

    def to_dict(self):
        """JSON-ready representation of the factors and the core"""
        return {'dims': {'N': self.N, 'K': self.K, 'L': self.L, 'C': self.C},
                'U': self.U.tolist(),
                'V': self.V.tolist(),
                'Y': self.Y.tolist(),
                'G': tensor_to_dict(self.G)}

    @classmethod
    def from_dict(cls, data):
        """Inverse of :meth:`to_dict`"""
        def matrix(key, rows, cols):
            values = np.array(data[key], dtype=float).reshape(rows, cols)
            return values

        dims = data['dims']
        return cls(matrix('U', dims['N'], dims['K']),
                   matrix('V', dims['N'], dims['K']),
                   matrix('Y', dims['L'], dims['C']),
                   tensor_from_dict(data['G']))


def reconstruct(model):
    """Compute ``G x_1 U x_2 V x_3 Y``

    Parameters
    ----------
    model: NNTuckModel
        The model

    Returns
    -------
    np.ndarray
        The N x N x L rate tensor
    """
    return multi_mode_product(model.G, model.factors)


def param_count(spec, N, L):
    """Count the free parameters of a model class

    ``Y = I`` and ``Y = 1`` are fixed and shared factors are counted once.

    Parameters
    ----------
    spec: ModelSpec
        The model class
    N: int
        The number of nodes
    L: int
        The number of layers

    Returns
    -------
    int
        The number of free parameters
    """
    K = spec.K
    C = spec.layer_dim(L)

    # U, plus V unless it is tied to U
    factors = N * K if spec.symmetric else 2 * N * K

    # Only the dependent regime estimates a separate Y
    if spec.regime == DEPENDENT:
        factors += L * C

    per_slice = K * (K + 1) // 2 if spec.symmetric else K * K

    return factors + C * per_slice


def validate(model, spec, atol=0.):
    """List every constraint of ``spec`` that ``model`` violates

    Parameters
    ----------
    model: NNTuckModel
        The model to check
    spec: ModelSpec
        The constraint regime
    atol: float
        Absolute tolerance for the equality constraints

    Returns
    -------
    list
        The violation messages, empty when the model is valid
    """
    violations = []

    for name, values in zip('UVYG', model.factors + [model.G]):
        if (values < 0).any():
            violations.append('negative entries in {}'.format(name))
        if not np.isfinite(values).all():
            violations.append('non-finite entries in {}'.format(name))

    if model.K != spec.K:
        violations.append('K={} but the model class has K={}'.format(model.K, spec.K))

    C = spec.layer_dim(model.L)
    if model.C != C:
        violations.append('C={} but the model class requires C={}'.format(model.C, C))

    if spec.regime == INDEPENDENT and not (model.Y.shape[0] == model.Y.shape[1] and np.allclose(model.Y, np.eye(model.L), rtol=0, atol=atol)):
        violations.append('Y≠I')

    if spec.regime == REDUNDANT and not (model.C == 1 and np.allclose(model.Y, 1., rtol=0, atol=atol)):
        violations.append('Y≠ones')

    if spec.regime == SCA:
        if model.L != model.N:
            violations.append('L≠N')
        elif model.Y.shape != model.U.shape or not np.allclose(model.U, model.Y, rtol=0, atol=atol):
            violations.append('U≠Y')

    if spec.symmetric:
        if not np.allclose(model.U, model.V, rtol=0, atol=atol):
            violations.append('U≠V')
        if model.G.shape[0] != model.G.shape[1] or not np.allclose(model.G, model.G.transpose(1, 0, 2), rtol=0, atol=atol):
            violations.append('core asymmetry')

    return violations


def random_model(spec, N, L, rng, init_scale=1.):
    """Draw a model satisfying the constraints of ``spec``

    Free factor entries are uniform on (0, 1] and core entries uniform on
    (0, init_scale].  Symmetric specs copy U into V and replace each core
    slice by ``G_c^T G_c``.

    Parameters
    ----------
    spec: ModelSpec
        The model class
    N: int
        The number of nodes
    L: int
        The number of layers
    rng: numpy.random.Generator
        The random generator
    init_scale: float
        The upper bound of the core entries

    Returns
    -------
    NNTuckModel
        The model
    """
    K = spec.K
    C = spec.layer_dim(L)

    # 1 - [0, 1) is (0, 1]
    U = 1. - rng.random((N, K))
    V = 1. - rng.random((N, K))
    Y = 1. - rng.random((L, C))
    G = init_scale * (1. - rng.random((K, K, C)))

    if spec.regime == INDEPENDENT:
        Y = np.eye(L)
    elif spec.regime == REDUNDANT:
        Y = np.ones((L, 1))
    elif spec.regime == SCA:
        U = Y.copy()

    if spec.symmetric:
        V = U.copy()
        G = np.einsum('ikc,ilc->klc', G, G)
        G = (G + G.transpose(1, 0, 2)) / 2.

    return NNTuckModel(U, V, Y, G)


def is_nested(null_spec, alt_spec, N, L):
    """Check that the null class sits inside the alternative class

    Parameters
    ----------
    null_spec: ModelSpec
        The restricted model class
    alt_spec: ModelSpec
        The richer model class
    N: int
        The number of nodes
    L: int
        The number of layers

    Returns
    -------
    bool
        True when every null model can be written as an alternative model
        and the alternative has strictly more free parameters
    """
    # A symmetric class sits inside its directed counterpart only
    if alt_spec.symmetric and not null_spec.symmetric:
        return False

    K, Ka = null_spec.K, alt_spec.K
    C, Ca = null_spec.layer_dim(L), alt_spec.layer_dim(L)
    pair = (null_spec.regime, alt_spec.regime)

    if pair == (REDUNDANT, DEPENDENT) or pair == (DEPENDENT, DEPENDENT):
        ok = Ka >= K and Ca >= C
    elif pair in ((REDUNDANT, INDEPENDENT), (DEPENDENT, INDEPENDENT)):
        ok = Ka >= K
    elif pair == (SCA, DEPENDENT):
        ok = Ka >= K and Ca >= K
    elif pair == (SCA, INDEPENDENT):
        ok = Ka >= K
    else:
        ok = False

    return ok and param_count(null_spec, N, L) < param_count(alt_spec, N, L)


def embed(model, alt_spec):
    """Write a nested null model exactly as a model of the alternative class

    Extra social or layer groups are padded with zeros, which the
    multiplicative updates keep at zero, and an independent alternative
    absorbs the layer factor into the core (``G x_3 Y``, ``Y = I``).

    Parameters
    ----------
    model: NNTuckModel
        The fitted null model
    alt_spec: ModelSpec
        The alternative class

    Returns
    -------
    NNTuckModel
        A model of the alternative class with the same reconstruction
    """
    N, K, L, C = model.N, model.K, model.L, model.C
    Ka = alt_spec.K
    Ca = alt_spec.layer_dim(L)

    if Ka < K:
        raise ArgumentError('Cannot embed K={} into K={}'.format(K, Ka))

    U = np.zeros((N, Ka))
    U[:, :K] = model.U
    V = np.zeros((N, Ka))
    V[:, :K] = model.V

    if alt_spec.regime == INDEPENDENT:
        core = np.einsum('klc,mc->klm', model.G, model.Y)
        Y = np.eye(L)
    elif alt_spec.regime == DEPENDENT:
        if Ca < C:
            raise ArgumentError('Cannot embed C={} into C={}'.format(C, Ca))
        core = model.G
        Y = np.zeros((L, Ca))
        Y[:, :C] = model.Y
    else:
        raise ArgumentError('Cannot embed into a {} model'.format(alt_spec.regime))

    G = np.zeros((Ka, Ka, Y.shape[1]))
    G[:K, :K, :core.shape[2]] = core

    if alt_spec.symmetric:
        V = U.copy()

    return NNTuckModel(U, V, Y, G)


def model_to_json(model, spec=None, **info):
    """Serialize a model with its spec and any provenance fields

    Parameters
    ----------
    model: NNTuckModel
        The model
    spec: ModelSpec (optional)
        Its class
    info: dict
        Extra JSON-ready fields, e.g. ``seed`` and ``final_kl``

    Returns
    -------
    str
        The JSON document
    """
    doc = model.to_dict()
    doc['spec'] = None if spec is None else spec.to_dict()
    doc.update(info)

    return canonical_json(doc)


def save_model(path, model, spec=None, **info):
    """Write :func:`model_to_json` to ``path``"""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(model_to_json(model, spec, **info))


def load_model(path):
    """Read a model written by :func:`save_model`

    Returns
    -------
    tuple
        The NNTuckModel, its ModelSpec (or None) and the full document
    """
    with open(path, encoding='utf-8') as f:
        doc = json.load(f)

    spec = None if doc.get('spec') is None else ModelSpec.from_dict(doc['spec'])

    return NNTuckModel.from_dict(doc), spec, doc
