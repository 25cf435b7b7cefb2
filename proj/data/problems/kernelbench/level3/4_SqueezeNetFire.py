import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        self.squeeze = nn.Conv2d(3, 6, 1)
        self.e1 = nn.Conv2d(6, 64, 1)
        self.e3 = nn.Conv2d(6, 64, 3, padding=1)
        self.net = lambda t: torch.cat([torch.relu(self.e1(torch.relu(self.squeeze(t)))), torch.relu(self.e3(torch.relu(self.squeeze(t))))], 1)
        self.repeat = 1

    def forward(self, *inputs):
        x = inputs[0]
        return self.net(x)


def get_inputs():
    return [torch.randn(8, 3, 224, 224)]


def get_init_inputs():
    return []
