import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.cell = nn.GRU(128, 256, batch_first=True)
        self.net = lambda t: self.cell(t)[0]
        self.repeat = 3

    def forward(self, *inputs):
        x = inputs[0]
        return sum(self.net(x) for _ in range(self.repeat))


def get_inputs():
    return [torch.randn(8, 512, 128)]


def get_init_inputs():
    return []
