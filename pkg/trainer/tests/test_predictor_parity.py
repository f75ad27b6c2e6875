"""The trainer's forward-pass transform and the engine's predictor must
classify the same cells as predicted on identical ofmaps."""
import numpy as np
import torch

import zvpred
from conftest import make_config

from zvtrain import run_training, window_keep_mask


def test_mask_matches_engine_on_random_maps():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        c = int(rng.integers(1, 5))
        h = int(rng.integers(1, 14))
        w = int(rng.integers(1, 14))
        k = int(rng.integers(2, 6))
        m = rng.standard_normal((c, h, w)).astype(np.float32)
        m[rng.random((c, h, w)) < 0.5] = 0.0
        engine = zvpred.predict_zero_windows(m, k)
        keep = window_keep_mask(torch.from_numpy(m).unsqueeze(0), k)
        trainer_skip = ~keep[0].numpy()
        assert np.array_equal(trainer_skip, engine.skip_mask)


def test_mask_matches_engine_on_trained_activation_dumps():
    outcome = run_training(make_config(seed=4))
    net = outcome.net
    images, _ = (outcome.test_images[:8], outcome.test_labels[:8])
    x = torch.from_numpy(images.astype(np.float32) / 255.0).unsqueeze(1)

    # dump each conv layer's post-ReLU ofmap
    dumps = []
    with torch.no_grad():
        cur = x
        for spec, mod in zip(net.arch, net.ops):
            cur = mod(cur)
            if spec["kind"] == "relu":
                dumps.append(cur.clone())
    assert dumps

    for k in (2, 3, 5):
        for batch in dumps:
            keep = window_keep_mask(batch, k)
            for b in range(batch.shape[0]):
                ofmap = batch[b].numpy()
                engine = zvpred.predict_zero_windows(ofmap, k)
                assert np.array_equal(~keep[b].numpy(), engine.skip_mask)
                # identical breakdown counts on the same map
                counts, _ = (engine.predicted_count, None)
                assert int((~keep[b]).sum().item()) == counts
