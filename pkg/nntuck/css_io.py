#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
A module to read and write Cognitive Social Structure datasets.

Three on-disk formats hold the same ``CssDataset``:

long-tsv
    A tab separated file with the header
    ``perceiver<TAB>sender<TAB>receiver<TAB>weight`` and one row per
    nonzero cell.  Lines starting with ``#`` carry provenance.  Labels,
    metadata and the directed flag live in the sibling
    ``<stem>.manifest.json``; without it labels are inferred from the rows.
layer-matrices
    A directory holding ``manifest.json`` and one ``<layer label>.csv``
    adjacency matrix (N rows of N comma separated integers) per layer.
dense-json
    A single JSON document with ``dims``, row-major ``values``, the labels,
    ``metadata`` and ``directed``.

All text is UTF-8 with ``\\n`` newlines and every weight is a nonnegative
integer.
"""

import io
import json
import os

import numpy as np
import pandas as pd

from .exceptions import ArgumentError, ParseError
from .tensor import as_tensor, tensor_from_dict, tensor_to_dict
from .utils import canonical_json

FORMATS = ('long-tsv', 'layer-matrices', 'dense-json')
LONG_HEADER = ['perceiver', 'sender', 'receiver', 'weight']


class CssDataset:
    """A network tensor together with its labels and metadata"""
    def __init__(self, tensor, node_labels=None, layer_labels=None, metadata=None, directed=True, provenance=None):
        """Instantiate a dataset

        Parameters
        ----------
        tensor: array-like
            The N x N x L count tensor
        node_labels: sequence (optional)
            N node names, '0'..'N-1' by default
        layer_labels: sequence (optional)
            L layer (perceiver) names, the node labels by default when L = N
        metadata: dict (optional)
            Free-form string attributes of the dataset
        directed: bool
            Whether ties have a direction
        provenance: dict (optional)
            Comment fields read from or written to a long-tsv header
        """
        self.tensor = as_tensor(tensor, 'dataset tensor')
        N1, N2, L = self.tensor.shape
        if N1 != N2:
            raise ArgumentError('A network tensor must be N x N x L, got {}'.format(self.tensor.shape))

        if not np.array_equal(self.tensor, np.round(self.tensor)):
            raise ArgumentError('Dataset weights must be integers')

        if node_labels is None:
            node_labels = [str(i) for i in range(N1)]
        if layer_labels is None:
            layer_labels = list(node_labels) if L == N1 else [str(l) for l in range(L)]

        self.node_labels = [str(label) for label in node_labels]
        self.layer_labels = [str(label) for label in layer_labels]
        self.metadata = dict(metadata or {})
        self.directed = bool(directed)
        self.provenance = dict(provenance or {})

        for name, labels, size in (('node', self.node_labels, N1), ('layer', self.layer_labels, L)):
            if len(labels) != size:
                raise ArgumentError('Expected {} {} labels, got {}'.format(size, name, len(labels)))
            if len(set(labels)) != size:
                raise ArgumentError('Duplicate {} labels'.format(name))

    @property
    def N(self):
        """The number of nodes"""
        return self.tensor.shape[0]

    @property
    def L(self):
        """The number of layers"""
        return self.tensor.shape[2]

    @property
    def is_css(self):
        """True when every node is also a perceiver with the same label"""
        return self.L == self.N and self.layer_labels == self.node_labels

    def manifest(self):
        """The label and metadata document stored next to the data"""
        return {'node_labels': self.node_labels,
                'layer_labels': self.layer_labels,
                'metadata': self.metadata,
                'directed': self.directed}

    def __repr__(self):
        return 'CssDataset(N={}, L={}, directed={})'.format(self.N, self.L, self.directed)


def infer_format(path):
    """Guess the format of a dataset from its path"""
    if os.path.isdir(path):
        return 'layer-matrices'
    if path.endswith('.json'):
        return 'dense-json'

    return 'long-tsv'


def manifest_path(path):
    """The sibling manifest of a long-tsv file, e.g. x.tsv -> x.manifest.json"""
    stem = os.path.splitext(path)[0]

    return stem + '.manifest.json'


def _read_text(path):
    """The UTF-8 text of a file, or a ParseError at the first undecodable line"""
    with open(path, 'rb') as f:
        raw = f.read()

    try:
        return raw.decode('utf-8')
    except UnicodeDecodeError as exc:
        line = raw[:exc.start].count(b'\n') + 1
        raise ParseError('Invalid UTF-8 byte 0x{:02x}'.format(raw[exc.start]), path=path, line=line) from None


def _read_manifest(path, required=True):
    """Load a manifest document, or None if it is optional and missing"""
    if not os.path.isfile(path):
        if required:
            raise ParseError('Missing manifest', path=path)
        return None

    try:
        manifest = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError('Invalid JSON: {}'.format(exc.msg), path=path, line=exc.lineno) from None

    for key in ('node_labels', 'layer_labels'):
        if key not in manifest:
            raise ParseError("Manifest has no '{}'".format(key), path=path)

    return manifest


def _parse_weight(text, path, line):
    """A nonnegative integer weight or a ParseError"""
    try:
        weight = int(text)
    except ValueError:
        raise ParseError("Non-integer weight '{}'".format(text), path=path, line=line) from None

    if weight < 0:
        raise ParseError('Negative weight {}'.format(weight), path=path, line=line)

    return weight


def _load_long_tsv(path):
    """Read the long-tsv format"""
    manifest = _read_manifest(manifest_path(path), required=False)

    provenance = {}
    rows = []
    header_seen = False
    for lineno, raw in enumerate(_read_text(path).split('\n'), start=1):
        line = raw.rstrip('\r')
        if line.startswith('#'):
            key, sep, value = line[1:].partition(':')
            if sep:
                provenance[key.strip()] = value.strip()
            continue
        if not line.strip():
            continue

        fields = line.split('\t')
        if not header_seen:
            if fields != LONG_HEADER:
                raise ParseError('Expected the header {}'.format('\\t'.join(LONG_HEADER)), path=path, line=lineno)
            header_seen = True
            continue

        if len(fields) != 4:
            raise ParseError('Expected 4 tab separated fields, got {}'.format(len(fields)), path=path, line=lineno)

        rows.append((lineno, fields[0], fields[1], fields[2], _parse_weight(fields[3], path, lineno)))

    if not header_seen:
        raise ParseError('Missing header line', path=path, line=1)

    if manifest is None:
        nodes, layers = [], []
        for _, perceiver, sender, receiver, _ in rows:
            for label in (sender, receiver):
                if label not in nodes:
                    nodes.append(label)
            if perceiver not in layers:
                layers.append(perceiver)
        if set(layers) == set(nodes):
            layers = list(nodes)
        manifest = {'node_labels': nodes, 'layer_labels': layers}

    node_index = {label: i for i, label in enumerate(manifest['node_labels'])}
    layer_index = {label: l for l, label in enumerate(manifest['layer_labels'])}
    tensor = np.zeros((len(node_index), len(node_index), len(layer_index)))

    seen = {}
    for lineno, perceiver, sender, receiver, weight in rows:
        for label, index, kind in ((perceiver, layer_index, 'perceiver'), (sender, node_index, 'sender'), (receiver, node_index, 'receiver')):
            if label not in index:
                raise ParseError("Unknown {} label '{}'".format(kind, label), path=path, line=lineno)

        triple = (perceiver, sender, receiver)
        if triple in seen:
            raise ParseError('Duplicate triple ({}, {}, {}) on lines {} and {}'.format(*triple, seen[triple], lineno), path=path, line=lineno)
        seen[triple] = lineno

        tensor[node_index[sender], node_index[receiver], layer_index[perceiver]] = weight

    if tensor.size == 0:
        raise ParseError('No nodes or layers; add a manifest listing the labels', path=path)

    return CssDataset(tensor, manifest['node_labels'], manifest['layer_labels'],
                      manifest.get('metadata'), manifest.get('directed', True), provenance)


def _load_layer_matrices(path):
    """Read the layer-matrices format"""
    manifest = _read_manifest(os.path.join(path, 'manifest.json'))
    N, L = len(manifest['node_labels']), len(manifest['layer_labels'])
    tensor = np.zeros((N, N, L))

    for l, label in enumerate(manifest['layer_labels']):
        layer_file = os.path.join(path, '{}.csv'.format(label))
        if not os.path.isfile(layer_file):
            raise ParseError("Missing matrix for layer '{}'".format(label), path=layer_file)

        try:
            frame = pd.read_csv(io.StringIO(_read_text(layer_file)), header=None, dtype=str, keep_default_na=False, skip_blank_lines=True)
        except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
            raise ParseError(str(exc).strip(), path=layer_file) from None
        if frame.shape != (N, N):
            raise ParseError('Expected a {} x {} matrix, got {} x {}'.format(N, N, *frame.shape), path=layer_file, line=min(frame.shape[0], N) + 1)

        for i, row in enumerate(frame.itertuples(index=False)):
            tensor[i, :, l] = [_parse_weight(value.strip(), layer_file, i + 1) for value in row]

    return CssDataset(tensor, manifest['node_labels'], manifest['layer_labels'],
                      manifest.get('metadata'), manifest.get('directed', True))


def _load_dense_json(path):
    """Read the dense-json format"""
    try:
        doc = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError('Invalid JSON: {}'.format(exc.msg), path=path, line=exc.lineno) from None

    try:
        tensor = tensor_from_dict(doc)
    except ArgumentError as exc:
        raise ParseError(str(exc), path=path) from None

    if (tensor < 0).any():
        raise ParseError('Negative weight {}'.format(tensor.min()), path=path)
    if not np.array_equal(tensor, np.round(tensor)):
        raise ParseError('Non-integer weights', path=path)

    return CssDataset(tensor, doc.get('node_labels'), doc.get('layer_labels'),
                      doc.get('metadata'), doc.get('directed', True))


def load(path, fmt=None):
    """Load a dataset

    Parameters
    ----------
    path: str
        The file, or directory for 'layer-matrices'
    fmt: str (optional)
        One of 'long-tsv', 'layer-matrices' or 'dense-json', inferred from
        the path when omitted

    Returns
    -------
    CssDataset
        The dataset
    """
    fmt = fmt or infer_format(path)
    if fmt not in FORMATS:
        raise ArgumentError("Unknown dataset format '{}'".format(fmt))

    if not os.path.exists(path):
        raise ArgumentError('No dataset at {}'.format(path))

    loader = {'long-tsv': _load_long_tsv, 'layer-matrices': _load_layer_matrices, 'dense-json': _load_dense_json}[fmt]
    try:
        return loader(path)
    except ArgumentError as exc:
        raise ParseError(str(exc), path=path) from None


def _write_text(path, text):
    """Write UTF-8 text with newline translation disabled"""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(text)


def save(dataset, path, fmt=None, provenance=None):
    """Write a dataset

    Parameters
    ----------
    dataset: CssDataset
        The dataset
    path: str
        The file, or directory for 'layer-matrices'
    fmt: str (optional)
        The format, inferred from the path when omitted
    provenance: dict (optional)
        Fields written as '# key: value' comments of a long-tsv file

    Returns
    -------
    list
        The paths written
    """
    fmt = fmt or ('layer-matrices' if not os.path.splitext(path)[1] else infer_format(path))
    if fmt not in FORMATS:
        raise ArgumentError("Unknown dataset format '{}'".format(fmt))

    ints = dataset.tensor.astype(np.int64)

    if fmt == 'long-tsv':
        provenance = dict(dataset.provenance, **(provenance or {}))
        lines = ['# {}: {}'.format(key, provenance[key]) for key in sorted(provenance)]
        lines.append('\t'.join(LONG_HEADER))
        for l in range(dataset.L):
            senders, receivers = np.nonzero(ints[:, :, l])
            for i, j in zip(senders, receivers):
                lines.append('\t'.join([dataset.layer_labels[l], dataset.node_labels[i], dataset.node_labels[j], str(ints[i, j, l])]))
        _write_text(path, '\n'.join(lines) + '\n')

        manifest = manifest_path(path)
        _write_text(manifest, canonical_json(dataset.manifest()))

        return [path, manifest]

    if fmt == 'layer-matrices':
        os.makedirs(path, exist_ok=True)
        written = [os.path.join(path, 'manifest.json')]
        _write_text(written[0], canonical_json(dataset.manifest()))
        for l, label in enumerate(dataset.layer_labels):
            if os.sep in label or label.startswith('.'):
                raise ArgumentError("Layer label '{}' cannot be used as a file name".format(label))
            layer_file = os.path.join(path, '{}.csv'.format(label))
            rows = [','.join(str(w) for w in row) for row in ints[:, :, l]]
            _write_text(layer_file, '\n'.join(rows) + '\n')
            written.append(layer_file)

        return written

    doc = tensor_to_dict(ints)
    doc.update(dataset.manifest())
    _write_text(path, canonical_json(doc))

    return [path]


def write_edge_list(matrix, labels, path):
    """Write a single-layer binary network as a source/target TSV

    Parameters
    ----------
    matrix: array-like
        The N x N adjacency matrix
    labels: sequence
        The N node labels
    path: str
        The output file
    """
    matrix = np.asarray(matrix)
    lines = ['source\ttarget']
    for i, j in zip(*np.nonzero(matrix)):
        lines.append('{}\t{}'.format(labels[i], labels[j]))

    _write_text(path, '\n'.join(lines) + '\n')

    return path
