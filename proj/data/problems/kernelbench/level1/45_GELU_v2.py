import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        pass

    def forward(self, *inputs):
        x = inputs[0]
        return F.gelu(x)


def get_inputs():
    return [torch.randn(128, 16384)]


def get_init_inputs():
    return []
