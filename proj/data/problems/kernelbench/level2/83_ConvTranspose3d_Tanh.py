import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.lead = nn.ConvTranspose3d(16, 32, 3, stride=2)

    def forward(self, *inputs):
        x = inputs[0]
        return torch.tanh(self.lead(x))


def get_inputs():
    return [torch.randn(16, 16, 8, 16, 16)]


def get_init_inputs():
    return []
