"""
Package to fit nonnegative Tucker models to multilayer network tensors
"""
from . import models
from . import parameters
from . import fitters
from . import simulations
