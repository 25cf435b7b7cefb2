import torch
import torch.nn as nn
import torch.nn.functional as F


class Model(nn.Module):
    def __init__(self):
        super().__init__()
        pass

    def forward(self, *inputs):
        x = inputs[0]
        return torch.matmul(x, inputs[1])


def get_inputs():
    return [torch.randn(3072, 1024), torch.randn(3072, 1024)]


def get_init_inputs():
    return []
