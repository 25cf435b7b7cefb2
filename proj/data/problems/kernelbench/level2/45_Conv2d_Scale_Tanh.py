import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.lead = nn.Conv2d(3, 16, 3)

    def forward(self, *inputs):
        x = inputs[0]
        return torch.tanh(self.lead(x) * 0.5)


def get_inputs():
    return [torch.randn(32, 3, 64, 64)]


def get_init_inputs():
    return []
