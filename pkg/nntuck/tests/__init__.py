# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
This packages contains package tests.
"""

from . import test_analysis
from . import test_cli
from . import test_css_io
from . import test_fitters
from . import test_model_selection
from . import test_models
from . import test_reports
from . import test_simulations
from . import test_statistical_tests
from . import test_tensor
