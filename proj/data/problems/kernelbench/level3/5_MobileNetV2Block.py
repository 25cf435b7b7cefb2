import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.net = nn.Sequential(nn.Conv2d(32, 192, 1), nn.BatchNorm2d(192), nn.ReLU6(), nn.Conv2d(192, 192, 3, padding=1, groups=192), nn.BatchNorm2d(192), nn.ReLU6(), nn.Conv2d(192, 32, 1), nn.BatchNorm2d(32))
        self.repeat = 1

    def forward(self, *inputs):
        x = inputs[0]
        return self.net(x)


def get_inputs():
    return [torch.randn(8, 32, 112, 112)]


def get_init_inputs():
    return []
