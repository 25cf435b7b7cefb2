import torch
# sample 0 for p2
