#!/usr/bin/python
# -*- coding: utf-8 -*-
"""
A module for utility functions shared across the ``nntuck`` package:
packaged configuration, environment variables, logging setup, seeding and
file digests.
"""

import datetime
import getpass
import hashlib
import json
import logging
import os
import socket
import sys

import numpy as np

# Name of the counter-based bit generator used for every random stream
RNG_ALGORITHM = 'numpy Philox4x64-10'

# Environment variable holding the number of worker processes
WORKERS_VARIABLE = 'NNTUCK_WORKERS'


def get_config():
    """Return a dictionary that holds the contents of the packaged
    ``fit_config.json`` defaults file.

    Returns
    -------
    settings : dict
        A dictionary that holds the contents of the config file.
    """

    config_file_location = os.path.join(os.path.dirname(__file__), 'data', 'fit_config.json')

    if not os.path.isfile(config_file_location):
        raise FileNotFoundError('Missing estimation configuration file ("fit_config.json")')

    with open(config_file_location, 'r') as config_file:
        settings = json.load(config_file)

    return settings


def get_env_variables():
    """Returns a dictionary containing the environment variable
    information used by ``nntuck``.

    Returns
    -------
    env_variables : dict
        A dictionary with the ``workers`` count
    """

    env_variables = {}

    workers = os.environ.get(WORKERS_VARIABLE, '1')
    try:
        env_variables['workers'] = max(1, int(workers))
    except ValueError:
        logging.warning('Ignoring non-integer ${}={!r}'.format(WORKERS_VARIABLE, workers))
        env_variables['workers'] = 1

    return env_variables


def configure_logging(log_dir=None, level=logging.INFO):
    """Configure the root logger for a command line run.

    Messages always go to standard error; when ``log_dir`` is given a
    log file named after the current time is written there as well.

    Parameters
    ----------
    log_dir : str (optional)
        Directory in which to create the log file
    level : int
        The logging level

    Returns
    -------
    log_file : str or None
        The path of the log file, if one was created
    """

    # Make sure no other root handlers exist before configuring the logger
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)

    handlers = [logging.StreamHandler(sys.stderr)]
    log_file = None
    if log_dir is not None:
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, '{}.log'.format(datetime.datetime.now().strftime('%Y-%m-%d-%H-%M-%S')))
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(handlers=handlers,
                        format='%(asctime)s %(levelname)s: %(message)s',
                        datefmt='%m/%d/%Y %H:%M:%S %p',
                        level=level)

    # Log environment information
    try:
        logging.info('User: ' + getpass.getuser())
    except (KeyError, OSError):
        logging.info('User: unknown')
    logging.info('System: ' + socket.gethostname())
    logging.info('Python Version: ' + sys.version.replace('\n', ''))
    logging.info('Python Executable Path: ' + sys.executable)

    return log_file


def derive_seed(master_seed, *keys):
    """Derive a reproducible sub-seed from a master seed.

    The sub-seed only depends on ``master_seed`` and the integer keys
    (e.g. a restart index or a fold number), so any single restart can be
    reproduced without replaying the others.

    Parameters
    ----------
    master_seed: int
        The unsigned master seed
    keys: int
        The counters identifying the sub-stream

    Returns
    -------
    int
        An unsigned 32-bit seed
    """
    sequence = np.random.SeedSequence([int(master_seed)] + [int(k) for k in keys])

    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def make_rng(seed):
    """Build the counter-based generator used for every random draw

    Parameters
    ----------
    seed: int
        The unsigned seed

    Returns
    -------
    numpy.random.Generator
        A generator backed by ``numpy.random.Philox``
    """
    return np.random.Generator(np.random.Philox(int(seed)))


def file_digest(path):
    """SHA-256 digest of a file, or of every file below a directory

    Parameters
    ----------
    path: str
        The file or directory

    Returns
    -------
    str
        The hexadecimal digest
    """
    sha = hashlib.sha256()

    if os.path.isdir(path):
        for root, dirs, files in os.walk(path):
            dirs.sort()
            for fname in sorted(files):
                full = os.path.join(root, fname)
                sha.update(os.path.relpath(full, path).encode('utf-8'))
                with open(full, 'rb') as f:
                    sha.update(f.read())
    else:
        with open(path, 'rb') as f:
            sha.update(f.read())

    return sha.hexdigest()


def canonical_json(obj):
    """Serialize to JSON with sorted keys and a trailing newline so equal
    inputs always give equal bytes"""
    return json.dumps(obj, sort_keys=True, indent=2) + '\n'


def config_hash(obj):
    """SHA-256 digest of the canonical JSON form of ``obj``"""
    return hashlib.sha256(canonical_json(obj).encode('utf-8')).hexdigest()
