"""Zero-value predictor as a non-trainable forward-pass transform.

Applies the same rule as the inference engine: each channel plane is
tiled by k x k windows anchored at (0, 0), margins behave as zero
padding, and when every in-bounds main-diagonal cell of a window is zero
the remaining in-bounds cells of that window are forced to exact 0.0.
The keep-mask is computed without gradient tracking and applied as a
constant multiplier, so backpropagation through the altered forward
values is otherwise untouched (the predictor has no parameters).
"""
from __future__ import annotations

import math

import torch


def window_keep_mask(x: torch.Tensor, k: int, threshold: float = 0.0) -> torch.Tensor:
    """Boolean mask over (B, C, H, W): False where cells are predicted zero.

    Diagonal cells are always kept; cells of non-triggered windows are
    kept; only non-diagonal cells of triggered windows are dropped.
    """
    b, c, h, w = x.shape
    gh = math.ceil(h / k)
    gw = math.ceil(w / k)
    zero = x.abs() <= threshold
    padded = torch.ones((b, c, gh * k, gw * k), dtype=torch.bool, device=x.device)
    padded[:, :, :h, :w] = zero
    blocks = padded.view(b, c, gh, k, gw, k)
    diag = torch.stack([blocks[:, :, :, i, :, i] for i in range(k)], dim=-1)
    trigger = diag.all(dim=-1)  # (B, C, gh, gw)

    off_diag = ~torch.eye(k, dtype=torch.bool, device=x.device)
    drop = trigger[:, :, :, None, :, None] & off_diag[None, None, :, None, :]
    drop = drop.reshape(b, c, gh * k, gw * k)[:, :, :h, :w]
    return ~drop


class WindowZeroPredictor(torch.nn.Module):
    """Masks one conv layer's post-activation ofmap. Disabled -> identity."""

    def __init__(self, window_k: int, threshold: float = 0.0, enabled: bool = True):
        super().__init__()
        if not 2 <= window_k <= 5:
            raise ValueError(f"window_k must be in 2..5, got {window_k}")
        self.window_k = window_k
        self.threshold = threshold
        self.enabled = enabled
        # filled by forward when stats collection is on
        self.collect_stats = False
        self.last_predicted = 0
        self.last_total = 0

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if not self.enabled:
            return x
        with torch.no_grad():
            keep = window_keep_mask(x, self.window_k, self.threshold)
            if self.collect_stats:
                self.last_predicted = int((~keep).sum().item())
                self.last_total = keep.numel()
        return x * keep.to(x.dtype)

    def extra_repr(self) -> str:
        return f"window_k={self.window_k}, enabled={self.enabled}"
