"""Uplink Monte Carlo simulator for line-of-sight cell-free massive MIMO."""

from .association import ServiceMap, ap_centric, fully_connected, strong_interferers, ue_centric
from .channel import UpaGeometry, attenuation, exact_channel, local_channel, prop_phase, steering_farfield
from .estimation import ChannelEstimate, SceGrids, perfect_csi, sce, sce_batch, uce
from .harness import CampaignConfig, Variant, empirical_cdf, run_campaign, run_sweep
from .performance import (
    MomentSet,
    estimate_moments,
    sinr_centralized,
    sinr_decentralized,
    sinr_decentralized_opt,
    spectral_efficiency,
)
from .scenario import ConfigError, GeometryError, GlobalConfig, Scenario, generate_scenario

__version__ = "0.1.0"
