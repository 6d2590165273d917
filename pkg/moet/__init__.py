from moet.imitation.dagger import dagger_train
from moet.learning.trainer import predict, train_moet
from moet.models.moet_model import MoetConfig, MoetModel

__all__ = ["MoetConfig", "MoetModel", "dagger_train", "predict", "train_moet"]
