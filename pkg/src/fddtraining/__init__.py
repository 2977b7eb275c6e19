"""Training-signal design and channel tracking for FDD massive MIMO downlink.

Single-user MISO links with spatially and temporally correlated Rayleigh
fading. Provides the channel model, MMSE/Kalman estimators, shared training
codebooks, open- and closed-loop training strategies and a deterministic
Monte Carlo engine.
"""
from .channel import ChannelConfig, exponential_correlation, jakes_eta
from .codebook import TrainingCodebook, design_gsp, load_codebook, save_codebook
from .estimation import KalmanState, kalman_correct, kalman_predict, x_ss_opt
from .simulator import BlockMetrics, SimConfig, run, run_sweep
from .strategies import MomentConvention, StrategyKind

__version__ = "0.1.0"

__all__ = [
    "BlockMetrics", "ChannelConfig", "KalmanState", "MomentConvention", "SimConfig",
    "StrategyKind", "TrainingCodebook", "design_gsp", "exponential_correlation", "jakes_eta",
    "kalman_correct", "kalman_predict", "load_codebook", "run", "run_sweep", "save_codebook",
    "x_ss_opt", "__version__",
]
