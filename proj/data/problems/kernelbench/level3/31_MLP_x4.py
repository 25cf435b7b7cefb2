import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(1000, 400), nn.ReLU(), nn.Linear(400, 800), nn.ReLU(), nn.Linear(800, 10))
        self.repeat = 4

    def forward(self, *inputs):
        x = inputs[0]
        return sum(self.net(x) for _ in range(self.repeat))


def get_inputs():
    return [torch.randn(8, 1000)]


def get_init_inputs():
    return []
