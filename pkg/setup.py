#!/usr/bin/env python
import os
from setuptools import setup, find_packages

REQUIRES = ['docopt',
            'hypothesis',
            'matplotlib',
            'numpy',
            'numpydoc',
            'pandas',
            'pytest',
            'scipy',
            'sphinx']

FILES = []
for root, _, files in os.walk("nntuck"):
    FILES += [os.path.join(root.replace("nntuck/", ""), fname) \
        for fname in files if not fname.endswith(".py") and not fname.endswith(".pyc")]

setup(name='nntuck',
      version='0.1.0',
      description='Nonnegative Tucker decompositions of multilayer networks and Cognitive Social Structures',
      packages=find_packages(".", exclude=["*.tests"]),
      package_data={'nntuck': FILES},
      install_requires=REQUIRES,
      entry_points={'console_scripts': ['nntuck=nntuck.cli:main']},
      license='MIT',
      long_description='',
      zip_safe=False
)
