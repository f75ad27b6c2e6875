from zvtrain import TrainConfig

ARCH_LAYERS = [
    {"kind": "conv", "out_channels": 8, "kernel": 3, "pad": 1},
    {"kind": "relu"},
    {"kind": "maxpool", "kernel": 2, "stride": 2},
    {"kind": "conv", "out_channels": 16, "kernel": 3, "pad": 1},
    {"kind": "relu"},
    {"kind": "maxpool", "kernel": 2, "stride": 2},
    {"kind": "flatten"},
    {"kind": "linear", "out_features": 10},
]


def make_config(**overrides) -> TrainConfig:
    base = {
        "name": "shapes_cnn",
        "input_shape": [1, 16, 16],
        "class_count": 10,
        "layers": ARCH_LAYERS,
        "epochs": 1,
        "seed": 1,
        "train_count": 600,
        "test_count": 200,
        "retrain_epochs": 1,
    }
    base.update(overrides)
    return TrainConfig.from_dict(base)
