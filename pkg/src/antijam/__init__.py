"""Anti-jamming over spectrum waterfalls: simulator, learner, and harness."""

from .agent import (
    EpsilonSchedule,
    EvalReport,
    ReplayBuffer,
    TrainHyper,
    TrainingReport,
    Transition,
    evaluate,
    select_action,
    td_target,
    train,
)
from .config import ExperimentConfig, JammerConfig, build_env, load_config, parse_config
from .env import Action, RewardConfig, SpectrumEnv, StepOutcome, compute_sinr_db, epoch_reward
from .errors import ConfigError
from .jammers import CombJammer, IntelligentJammer, Jammer, RandomJammer, SweepJammer
from .qnet import (
    Architecture,
    QNetworkParams,
    backward,
    forward,
    gradient_check,
    init_params,
    load_params,
    loss,
    preprocess,
    save_params,
    sgd_step,
)
from .spectrum import (
    BandConfig,
    Emission,
    SpectrumRow,
    WaterfallState,
    WaveformSpec,
    band_power,
    raised_cosine_psd,
    render_row,
)

__version__ = "0.1.0"
