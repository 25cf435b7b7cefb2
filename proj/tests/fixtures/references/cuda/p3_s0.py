import torch
# sample 0 for p3 (incorrect)
