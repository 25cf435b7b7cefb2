import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        pass

    def forward(self, *inputs):
        x = inputs[0]
        return x / torch.sqrt(torch.mean(x * x, dim=1, keepdim=True) + 1e-5)


def get_inputs():
    return [torch.randn(48, 64, 256, 256)]


def get_init_inputs():
    return []
