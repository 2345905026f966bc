"""Threshold bound states: radial solver, critical couplings, decay envelopes and many-body region bounds."""

__version__ = "0.1.0"
