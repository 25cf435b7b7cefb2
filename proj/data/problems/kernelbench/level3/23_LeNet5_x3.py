import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(nn.Conv2d(1, 6, 5), nn.ReLU(), nn.MaxPool2d(2), nn.Conv2d(6, 16, 5), nn.ReLU(), nn.MaxPool2d(2), nn.Flatten(), nn.Linear(256, 120), nn.ReLU(), nn.Linear(120, 10))
        self.repeat = 3

    def forward(self, *inputs):
        x = inputs[0]
        return sum(self.net(x) for _ in range(self.repeat))


def get_inputs():
    return [torch.randn(8, 1, 28, 28)]


def get_init_inputs():
    return []
