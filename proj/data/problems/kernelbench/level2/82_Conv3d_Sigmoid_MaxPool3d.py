import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.lead = nn.Conv3d(3, 16, 3)
        self.pool = nn.MaxPool3d(2)

    def forward(self, *inputs):
        x = inputs[0]
        return self.pool(torch.sigmoid(self.lead(x)))


def get_inputs():
    return [torch.randn(16, 3, 16, 32, 32)]


def get_init_inputs():
    return []
