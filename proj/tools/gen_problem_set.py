#!/usr/bin/env python3
"""Generate the bundled KernelBench-style problem set (manifest + module sources).

The set mirrors the benchmark's level sizes (100 / 100 / 50) and includes the
3-D transposed convolution and 3-D pooling problems that the Metal backend
cannot run. Output is deterministic; rerun after editing the tables below.

    python3 tools/gen_problem_set.py data/problems/kernelbench
"""

import argparse
import json
import pathlib
import re

METAL_UNSUPPORTED = ["ConvTranspose3d", "AvgPool3d", "MaxPool3d"]

HEADER = "import torch\nimport torch.nn as nn\nimport torch.nn.functional as F\n\n\n"


def module(init_lines, forward_expr, inputs, init_inputs="[]"):
    init = "\n".join("        " + line for line in init_lines) or "        pass"
    return (
        HEADER
        + "class Model(nn.Module):\n"
        + "    def __init__(self):\n"
        + "        super().__init__()\n"
        + init
        + "\n\n"
        + "    def forward(self, *inputs):\n"
        + f"        x = inputs[0]\n        return {forward_expr}\n\n\n"
        + "def get_inputs():\n"
        + f"    return [{', '.join(inputs)}]\n\n\n"
        + "def get_init_inputs():\n"
        + f"    return {init_inputs}\n"
    )


# Level 1: single operators. (name, init lines, forward expression, inputs)
LEVEL1_BASE = [
    ("Matmul_square", [], "torch.matmul(x, inputs[1])", ["torch.randn(1024, 1024)", "torch.randn(1024, 1024)"]),
    ("Matmul_rect", [], "torch.matmul(x, inputs[1])", ["torch.randn(512, 2048)", "torch.randn(2048, 256)"]),
    ("Batched_matmul", [], "torch.bmm(x, inputs[1])", ["torch.randn(32, 128, 256)", "torch.randn(32, 256, 64)"]),
    ("Matvec", [], "torch.matmul(x, inputs[1])", ["torch.randn(2048, 4096)", "torch.randn(4096, 1)"]),
    ("Scalar_mul", [], "x * 3.5", ["torch.randn(4096, 4096)"]),
    ("ReLU", [], "torch.relu(x)", ["torch.randn(64, 16384)"]),
    ("LeakyReLU", [], "F.leaky_relu(x, 0.01)", ["torch.randn(64, 16384)"]),
    ("Sigmoid", [], "torch.sigmoid(x)", ["torch.randn(64, 16384)"]),
    ("Tanh", [], "torch.tanh(x)", ["torch.randn(64, 16384)"]),
    ("GELU", [], "F.gelu(x)", ["torch.randn(64, 16384)"]),
    ("Softmax", [], "torch.softmax(x, dim=1)", ["torch.randn(64, 16384)"]),
    ("LogSoftmax", [], "torch.log_softmax(x, dim=1)", ["torch.randn(64, 16384)"]),
    ("Swish", [], "x * torch.sigmoid(x)", ["torch.randn(64, 16384)"]),
    ("Softplus", [], "F.softplus(x)", ["torch.randn(64, 16384)"]),
    ("Hardtanh", [], "F.hardtanh(x, -1.0, 1.0)", ["torch.randn(64, 16384)"]),
    ("BatchNorm2d", ["self.op = nn.BatchNorm2d(64)"], "self.op(x)", ["torch.randn(16, 64, 128, 128)"]),
    ("LayerNorm", ["self.op = nn.LayerNorm([64, 128])"], "self.op(x)", ["torch.randn(16, 32, 64, 128)"]),
    ("InstanceNorm2d", ["self.op = nn.InstanceNorm2d(64)"], "self.op(x)", ["torch.randn(16, 64, 128, 128)"]),
    ("GroupNorm", ["self.op = nn.GroupNorm(8, 64)"], "self.op(x)", ["torch.randn(16, 64, 128, 128)"]),
    ("RMSNorm", [], "x / torch.sqrt(torch.mean(x * x, dim=1, keepdim=True) + 1e-5)", ["torch.randn(16, 64, 256, 256)"]),
    ("Sum_reduction", [], "torch.sum(x, dim=1, keepdim=True)", ["torch.randn(16, 256, 256)"]),
    ("Mean_reduction", [], "torch.mean(x, dim=1)", ["torch.randn(16, 256, 256)"]),
    ("Max_reduction", [], "torch.max(x, dim=1)[0]", ["torch.randn(16, 256, 256)"]),
    ("Argmax", [], "torch.argmax(x, dim=1)", ["torch.randn(16, 256, 256)"]),
    ("Cumsum", [], "torch.cumsum(x, dim=1)", ["torch.randn(128, 4000)"]),
    ("Conv2d_square", ["self.op = nn.Conv2d(3, 64, 3)"], "self.op(x)", ["torch.randn(16, 3, 256, 256)"]),
    ("Conv2d_depthwise", ["self.op = nn.Conv2d(64, 64, 3, groups=64)"], "self.op(x)", ["torch.randn(16, 64, 128, 128)"]),
    ("Conv1d", ["self.op = nn.Conv1d(32, 64, 5)"], "self.op(x)", ["torch.randn(16, 32, 4096)"]),
    ("Conv3d", ["self.op = nn.Conv3d(3, 16, 3)"], "self.op(x)", ["torch.randn(8, 3, 32, 64, 64)"]),
    ("ConvTranspose2d", ["self.op = nn.ConvTranspose2d(32, 64, 3)"], "self.op(x)", ["torch.randn(16, 32, 64, 64)"]),
    ("ConvTranspose1d", ["self.op = nn.ConvTranspose1d(32, 64, 5)"], "self.op(x)", ["torch.randn(16, 32, 2048)"]),
    ("MaxPool2d", ["self.op = nn.MaxPool2d(2)"], "self.op(x)", ["torch.randn(16, 32, 128, 128)"]),
    ("AvgPool2d", ["self.op = nn.AvgPool2d(2)"], "self.op(x)", ["torch.randn(16, 32, 128, 128)"]),
    ("MaxPool1d", ["self.op = nn.MaxPool1d(4)"], "self.op(x)", ["torch.randn(16, 64, 8192)"]),
]

LEVEL1_METAL_EXCLUDED = [
    ("ConvTranspose3d_square", ["self.op = nn.ConvTranspose3d(16, 32, 3)"], "self.op(x)", ["torch.randn(8, 16, 16, 32, 32)"]),
    ("ConvTranspose3d_strided", ["self.op = nn.ConvTranspose3d(16, 32, 3, stride=2)"], "self.op(x)", ["torch.randn(8, 16, 16, 32, 32)"]),
    ("ConvTranspose3d_grouped", ["self.op = nn.ConvTranspose3d(16, 32, 3, groups=4)"], "self.op(x)", ["torch.randn(8, 16, 16, 32, 32)"]),
    ("AvgPool3d", ["self.op = nn.AvgPool3d(2)"], "self.op(x)", ["torch.randn(8, 16, 32, 64, 64)"]),
    ("AvgPool3d_strided", ["self.op = nn.AvgPool3d(3, stride=2)"], "self.op(x)", ["torch.randn(8, 16, 32, 64, 64)"]),
    ("AvgPool3d_padded", ["self.op = nn.AvgPool3d(3, padding=1)"], "self.op(x)", ["torch.randn(8, 16, 32, 64, 64)"]),
    ("MaxPool3d", ["self.op = nn.MaxPool3d(2)"], "self.op(x)", ["torch.randn(8, 16, 32, 64, 64)"]),
    ("MaxPool3d_strided", ["self.op = nn.MaxPool3d(3, stride=2)"], "self.op(x)", ["torch.randn(8, 16, 32, 64, 64)"]),
    ("MaxPool3d_dilated", ["self.op = nn.MaxPool3d(3, dilation=2)"], "self.op(x)", ["torch.randn(8, 16, 32, 64, 64)"]),
]

# Level 2: operator chains. Each chain is a lead operator followed by epilogues.
LEAD_2D = [
    ("Conv2d", "self.lead = nn.Conv2d(3, 16, 3)", "torch.randn(32, 3, 64, 64)"),
    ("ConvTranspose2d", "self.lead = nn.ConvTranspose2d(16, 32, 3, stride=2)", "torch.randn(32, 16, 32, 32)"),
    ("Gemm", "self.lead = nn.Linear(512, 1024)", "torch.randn(128, 512)"),
    ("Conv3d", "self.lead = nn.Conv3d(3, 16, 3)", "torch.randn(16, 3, 16, 32, 32)"),
]
LEAD_EXCLUDED = [
    ("ConvTranspose3d", "self.lead = nn.ConvTranspose3d(16, 32, 3, stride=2)", "torch.randn(16, 16, 8, 16, 16)"),
]
EPILOGUES = [
    ("ReLU", "torch.relu({})"),
    ("GELU", "F.gelu({})"),
    ("Sigmoid", "torch.sigmoid({})"),
    ("Tanh", "torch.tanh({})"),
    ("Scale", "{} * 0.5"),
    ("BiasAdd", "{} + 0.1"),
    ("Clamp", "torch.clamp({}, -1.0, 1.0)"),
    ("Swish", "{0} * torch.sigmoid({0})"),
    ("HardSwish", "F.hardswish({})"),
    ("Mish", "F.mish({})"),
]
POOL_EXCLUDED = [("MaxPool3d", "self.pool = nn.MaxPool3d(2)"), ("AvgPool3d", "self.pool = nn.AvgPool3d(2)")]


def level2_problems():
    problems = []
    # 79 chains on supported leads.
    k = 0
    while len(problems) < 79:
        lead = LEAD_2D[k % len(LEAD_2D)]
        e1 = EPILOGUES[k % len(EPILOGUES)]
        e2 = EPILOGUES[(k * 3 + 1) % len(EPILOGUES)]
        expr = e2[1].format(e1[1].format("self.lead(x)"))
        problems.append((f"{lead[0]}_{e1[0]}_{e2[0]}", [lead[1]], expr, [lead[2]]))
        k += 1
    # 21 chains that need a 3-D transposed convolution or 3-D pooling.
    for j in range(21):
        e1 = EPILOGUES[j % len(EPILOGUES)]
        if j % 3 == 0:
            lead = LEAD_EXCLUDED[0]
            expr = e1[1].format("self.lead(x)")
            problems.append((f"{lead[0]}_{e1[0]}", [lead[1]], expr, [lead[2]]))
        else:
            pool = POOL_EXCLUDED[j % 2]
            lead = LEAD_2D[3]
            expr = "self.pool(" + e1[1].format("self.lead(x)") + ")"
            problems.append((f"{lead[0]}_{e1[0]}_{pool[0]}", [lead[1], pool[1]], expr, [lead[2]]))
    return problems


NETWORKS = [
    ("MLP", ["self.net = nn.Sequential(nn.Linear(1000, 400), nn.ReLU(), nn.Linear(400, 800), nn.ReLU(), nn.Linear(800, 10))"], "torch.randn(8, 1000)"),
    ("DeepNarrowMLP", ["self.net = nn.Sequential(*[m for _ in range(8) for m in (nn.Linear(256, 256), nn.ReLU())])"], "torch.randn(8, 256)"),
    ("LeNet5", ["self.net = nn.Sequential(nn.Conv2d(1, 6, 5), nn.ReLU(), nn.MaxPool2d(2), nn.Conv2d(6, 16, 5), nn.ReLU(), nn.MaxPool2d(2), nn.Flatten(), nn.Linear(256, 120), nn.ReLU(), nn.Linear(120, 10))"], "torch.randn(8, 1, 28, 28)"),
    ("SqueezeNetFire", ["self.squeeze = nn.Conv2d(3, 6, 1)", "self.e1 = nn.Conv2d(6, 64, 1)", "self.e3 = nn.Conv2d(6, 64, 3, padding=1)", "self.net = lambda t: torch.cat([torch.relu(self.e1(torch.relu(self.squeeze(t)))), torch.relu(self.e3(torch.relu(self.squeeze(t))))], 1)"], "torch.randn(8, 3, 224, 224)"),
    ("MobileNetV2Block", ["self.net = nn.Sequential(nn.Conv2d(32, 192, 1), nn.BatchNorm2d(192), nn.ReLU6(), nn.Conv2d(192, 192, 3, padding=1, groups=192), nn.BatchNorm2d(192), nn.ReLU6(), nn.Conv2d(192, 32, 1), nn.BatchNorm2d(32))"], "torch.randn(8, 32, 112, 112)"),
    ("VGGBlock", ["self.net = nn.Sequential(nn.Conv2d(3, 64, 3, padding=1), nn.ReLU(), nn.Conv2d(64, 64, 3, padding=1), nn.ReLU(), nn.MaxPool2d(2))"], "torch.randn(8, 3, 224, 224)"),
    ("ResidualBlock", ["self.a = nn.Conv2d(64, 64, 3, padding=1)", "self.b = nn.Conv2d(64, 64, 3, padding=1)", "self.net = lambda t: torch.relu(t + self.b(torch.relu(self.a(t))))"], "torch.randn(8, 64, 56, 56)"),
    ("GRUCell", ["self.cell = nn.GRU(128, 256, batch_first=True)", "self.net = lambda t: self.cell(t)[0]"], "torch.randn(8, 512, 128)"),
    ("LSTM", ["self.cell = nn.LSTM(128, 256, batch_first=True)", "self.net = lambda t: self.cell(t)[0]"], "torch.randn(8, 512, 128)"),
    ("AttentionBlock", ["self.attn = nn.MultiheadAttention(256, 8, batch_first=True)", "self.net = lambda t: self.attn(t, t, t)[0]"], "torch.randn(8, 512, 256)"),
]


def level3_problems():
    problems = []
    widths = [1, 2, 3, 4, 5]
    for w in widths:
        for name, init, inp in NETWORKS:
            suffix = "" if w == 1 else f"_x{w}"
            stacked = init + ([f"self.repeat = {w}"])
            expr = "self.net(x)" if w == 1 else "sum(self.net(x) for _ in range(self.repeat))"
            problems.append((f"{name}{suffix}", stacked, expr, [inp]))
    return problems


def level1_problems():
    problems = []
    k = 0
    while len(problems) < 91:
        name, init, expr, inputs = LEVEL1_BASE[k % len(LEVEL1_BASE)]
        variant = k // len(LEVEL1_BASE)
        if variant:
            name = f"{name}_v{variant + 1}"
            inputs = [re.sub(r"torch\.randn\((\d+)", lambda m: f"torch.randn({int(m.group(1)) * (variant + 1)}", i) for i in inputs]
        problems.append((name, init, expr, inputs))
        k += 1
    # Interleave the unsupported problems at fixed positions.
    for j, p in enumerate(LEVEL1_METAL_EXCLUDED):
        problems.insert(40 + j * 7, p)
    return problems


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=pathlib.Path)
    args = ap.parse_args()
    out = args.out
    entries = []
    for level, problems in ((1, level1_problems()), (2, level2_problems()), (3, level3_problems())):
        assert len(problems) == {1: 100, 2: 100, 3: 50}[level], (level, len(problems))
        for idx, (name, init, expr, inputs) in enumerate(problems, start=1):
            pid = f"level{level}/problem{idx}"
            rel = pathlib.Path(f"level{level}") / f"{idx}_{name}.py"
            (out / rel).parent.mkdir(parents=True, exist_ok=True)
            (out / rel).write_text(module(init, expr, inputs))
            tags = ["single_op"] if level == 1 else (["fused"] if level == 2 else ["network"])
            entries.append({"id": pid, "level": level, "name": name, "source": str(rel), "tags": tags})
    manifest = {
        "name": "kernelbench-style",
        "unsupported_operations": {"metal": METAL_UNSUPPORTED},
        "problems": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
