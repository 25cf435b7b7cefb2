import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.op = nn.LayerNorm([64, 128])

    def forward(self, *inputs):
        x = inputs[0]
        return self.op(x)


def get_inputs():
    return [torch.randn(16, 32, 64, 128)]


def get_init_inputs():
    return []
