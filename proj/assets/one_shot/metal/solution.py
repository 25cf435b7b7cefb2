import torch
import torch.nn as nn

vector_add_source = r"""
#include <metal_stdlib>
using namespace metal;

kernel void vector_add(device const float* a [[buffer(0)]],
                       device const float* b [[buffer(1)]],
                       device float* out [[buffer(2)]],
                       uint i [[thread_position_in_grid]]) {
    out[i] = a[i] + b[i];
}
"""

vector_add_lib = torch.mps.compile_shader(vector_add_source)


class ModelNew(nn.Module):
    def __init__(self) -> None:
        super().__init__()

    def forward(self, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        a_c = a.contiguous()
        b_c = b.contiguous()
        out = torch.empty_like(a_c)
        vector_add_lib.vector_add(a_c, b_c, out, threads=a_c.numel())
        return out
