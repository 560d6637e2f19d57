from .sage import (EDGE_CLASS, NODE_CLASS, SageConfig, SageLayerParams, SageModel,
                   egraphsage_forward, forward, init_model, linegraphsage_forward)
from .train import TrainReport, TrainingError, gradient_check, predict, predict_array, train
from .serialize import FormatError, load_model, save_model

__all__ = [
    "EDGE_CLASS", "NODE_CLASS", "SageConfig", "SageLayerParams", "SageModel",
    "egraphsage_forward", "forward", "init_model", "linegraphsage_forward",
    "TrainReport", "TrainingError", "gradient_check", "predict", "predict_array", "train",
    "FormatError", "load_model", "save_model",
]
