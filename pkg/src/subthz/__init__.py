"""Full-stack downlink Monte-Carlo simulator for a single 140 GHz gNB-UE link."""

from .beamforming import PAIRINGS, AntennaPairing, ArrayConfig
from .channel import ChannelRealization, Condition, Scenario, ScenarioParams, draw_realization
from .config import SimConfig, default_config, load_config
from .link import LinkBudget, LinkModel, LinkState, McsTable
from .mac import RunMetrics, StackConfig, run_realization
from .montecarlo import CampaignSpec, confidence_interval, derive_stream, run_campaign

__version__ = "0.1.0"
