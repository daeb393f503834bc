"""Quadrotor identification, linear MPC position control and evaluation harness."""

from . import errors, frames, plant, sysid
from .control import ControllerConfig, PositionController
from .plant import PlantConfig, PlantState, VirtualRcCommand
from .sysid import FirstOrderModel, ScalingParams, SecondOrderModel

__version__ = "0.1.0"
