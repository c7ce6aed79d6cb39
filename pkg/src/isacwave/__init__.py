"""Robust dual-function waveform design for integrated sensing and communication.

The package designs transmit waveforms that serve a radar beampattern and
multi-user downlink communication at the same time, both at a nominal channel
estimate and under worst-case channel uncertainty (min-max design over a norm
ball of channels), and ships a seeded Monte-Carlo engine that maps the
conservative communication-vs-sensing performance frontier.
"""

from isacwave.model import SystemConfig, UncertaintySet
from isacwave.robust import DesignResult, design_robust_joint, design_robust_sensing

__all__ = [
    "SystemConfig",
    "UncertaintySet",
    "DesignResult",
    "design_robust_sensing",
    "design_robust_joint",
]

__version__ = "0.1.0"
