import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        pass

    def forward(self, *inputs):
        x = inputs[0]
        return torch.bmm(x, inputs[1])


def get_inputs():
    return [torch.randn(32, 128, 256), torch.randn(32, 256, 64)]


def get_init_inputs():
    return []
