"""Block networks over frozen base models, trained on synthetic line-segment tasks."""
from .block import BaseModel, BlockNetwork, BlockSpec, block_param_count, compose, train_block
from .config import ExperimentConfig
from .dataset import Dataset, build_dataset, read_dataset, write_dataset
from .network import Network, evaluate, mlp, param_count
from .stimuli import TASKS, gen_spec, rasterize, verify_spec
from .training import TrainConfig, train

__version__ = "0.1.0"
