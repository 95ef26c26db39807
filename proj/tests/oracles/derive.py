# Copyright 2026 The internimage Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Independent derivations of the numeric constants frozen in the C++ tests.

Run: python3 tests/oracles/derive.py
Needs mpmath and torch (CPU, float64). Nothing here imports the C++ code.
"""
import math

import mpmath
import torch

torch.set_default_dtype(torch.float64)
mpmath.mp.dps = 40


def gelu_exact(x):
    x = mpmath.mpf(x)
    return x * (1 + mpmath.erf(x / mpmath.sqrt(2))) / 2


def section(name):
    print(f"\n# {name}")


section("gelu")
for v in (1, -1, 0.5, 3, -10):
    print(f"gelu({v}) = {mpmath.nstr(gelu_exact(v), 20)}")


# ---------------------------------------------------------------- DCNv3
# Analytic instance shared with tests/dcnv3_test.cpp (closed-form fills).
N, C, G, KS, H, W = 1, 4, 2, 3, 5, 5
K = KS * KS
CG = C // G


def fill(shape, fn):
    t = torch.empty(shape)
    for idx in range(t.numel()):
        rem = idx
        coords = []
        for d in reversed(shape):
            coords.append(rem % d)
            rem //= d
        coords.reverse()
        t.view(-1)[idx] = fn(*coords)
    return t


x = fill((N, C, H, W), lambda n, c, i, j: math.sin(0.7 * c + 0.37 * i + 0.23 * j + 0.5 * n))
off = fill((N, 2 * K * G, H, W), lambda n, ch, i, j: 0.9 * math.sin(1.3 * ch + 0.5 * i - 0.7 * j))
logit = fill((N, K * G, H, W), lambda n, ch, i, j: math.cos(0.4 * ch + 0.3 * i + 0.2 * j))
proj = fill((C, C), lambda o, i: 0.5 * math.sin(4 * o + i + 1))
bias = torch.tensor([0.1 * o for o in range(C)])
r = fill((N, C, H, W), lambda n, c, i, j: math.cos(0.11 * (c * 25 + i * 5 + j)))


def sample(img, y, x_):
    """Bilinear sample of img (H, W) at scalar tensors y, x; zero outside."""
    y0 = math.floor(y.item())
    x0 = math.floor(x_.item())
    ly = y - y0
    lx = x_ - x0
    out = torch.zeros(())
    for dy, wy in ((0, 1 - ly), (1, ly)):
        for dx, wx in ((0, 1 - lx), (1, lx)):
            yy, xx = y0 + dy, x0 + dx
            if 0 <= yy < H and 0 <= xx < W:
                out = out + wy * wx * img[yy, xx]
    return out


def dcnv3(x, off, logit, proj, bias, normalization="softmax"):
    outs = []
    for n in range(N):
        rows = []
        for i in range(H):
            cols = []
            for j in range(W):
                agg = []
                for g in range(G):
                    lg = logit[n, g * K:(g + 1) * K, i, j]
                    m = torch.softmax(lg, 0) if normalization == "softmax" else torch.sigmoid(lg)
                    acc = torch.zeros(CG)
                    for k in range(K):
                        ky, kx = divmod(k, KS)
                        py = i - 1 + ky + off[n, (g * K + k) * 2 + 0, i, j]
                        px = j - 1 + kx + off[n, (g * K + k) * 2 + 1, i, j]
                        vals = torch.stack([sample(x[n, g * CG + c], py, px) for c in range(CG)])
                        acc = acc + m[k] * vals
                    agg.append(acc)
                v = torch.cat(agg)
                cols.append(proj @ v + bias)
            rows.append(torch.stack(cols, -1))
        outs.append(torch.stack(rows, -2))
    return torch.stack(outs)


for mode in ("softmax", "sigmoid"):
    xs, offs, lgs, ps, bs = (t.clone().requires_grad_(True) for t in (x, off, logit, proj, bias))
    y = dcnv3(xs, offs, lgs, ps, bs, mode)
    loss = (r * y).sum()
    loss.backward()
    section(f"dcnv3 analytic instance, {mode}")
    for (c, i, j) in ((0, 2, 2), (3, 0, 4), (1, 4, 0)):
        print(f"y[0,{c},{i},{j}] = {y[0, c, i, j].item():.17g}")
    print(f"sum(y) = {y.sum().item():.17g}")
    print(f"loss = {loss.item():.17g}")
    print(f"dx[0,2,1,3] = {xs.grad[0, 2, 1, 3].item():.17g}")
    print(f"doff[0,5,2,2] = {offs.grad[0, 5, 2, 2].item():.17g}")
    print(f"dlogit[0,7,0,0] = {lgs.grad[0, 7, 0, 0].item():.17g}")
    print(f"dproj[1,2] = {ps.grad[1, 2].item():.17g}")
    for nm, t in (("dx", xs), ("doff", offs), ("dlogit", lgs), ("dproj", ps), ("dbias", bs)):
        print(f"sum({nm}) = {t.grad.sum().item():.17g}")


# ---------------------------------------------------------------- params
def block_params(c, g, r=4, k=3, ls=False, shared=True):
    kk = k * k
    dcn = c * c + c if shared else kk * c * c
    pred = c * 9 + c + c * 3 * kk * g + 3 * kk * g
    norms = 4 * c
    ffn = c * r * c + r * c + r * c * c + c
    return dcn + pred + norms + ffn + (2 * c if ls else 0)


def model_params(c1, cp, l1, l3, r=4, nc=1000, ls=False, cin=3):
    h = c1 // 2
    stem = 9 * cin * h + h + 2 * h + 9 * h * c1 + c1 + 2 * c1
    depths = (l1, l1, l3, l1)
    total = stem
    for s in range(4):
        c = c1 << s
        total += depths[s] * block_params(c, c // cp, r, ls=ls)
        if s < 3:
            total += 9 * c * 2 * c + 2 * c + 2 * 2 * c
    total += (c1 << 3) * nc + nc
    return total


section("closed-form parameter counts (num_classes=1000)")
for name, args, ls in (("T", (64, 16, 4, 18), False), ("S", (80, 16, 4, 21), True),
                       ("B", (112, 16, 4, 21), True), ("L", (160, 16, 5, 22), True),
                       ("XL", (192, 16, 5, 24), True), ("H", (320, 32, 6, 32), True)):
    print(f"{name}: {model_params(*args, ls=ls)}")
print(f"toy (16,16,1,1) nc=10: {model_params(16, 16, 1, 1, nc=10)}")


# A literal torch module tree as a second, structural count.
class Block(torch.nn.Module):
    def __init__(self, c, g, ls):
        super().__init__()
        self.proj = torch.nn.Linear(c, c)
        self.dw = torch.nn.Conv2d(c, c, 3, padding=1, groups=c)
        self.pred = torch.nn.Linear(c, 27 * g)
        self.ln1 = torch.nn.LayerNorm(c)
        self.ln2 = torch.nn.LayerNorm(c)
        self.fc1 = torch.nn.Linear(c, 4 * c)
        self.fc2 = torch.nn.Linear(4 * c, c)
        if ls:
            self.s1 = torch.nn.Parameter(torch.zeros(c))
            self.s2 = torch.nn.Parameter(torch.zeros(c))


def torch_count(c1, cp, l1, l3, ls, nc=1000):
    mods = [torch.nn.Conv2d(3, c1 // 2, 3, 2, 1), torch.nn.LayerNorm(c1 // 2),
            torch.nn.Conv2d(c1 // 2, c1, 3, 2, 1), torch.nn.LayerNorm(c1)]
    for s, d in enumerate((l1, l1, l3, l1)):
        c = c1 << s
        mods += [Block(c, c // cp, ls) for _ in range(d)]
        if s < 3:
            mods += [torch.nn.Conv2d(c, 2 * c, 3, 2, 1), torch.nn.LayerNorm(2 * c)]
    mods.append(torch.nn.Linear(c1 << 3, nc))
    return sum(p.numel() for m in mods for p in m.parameters())


print(f"torch T: {torch_count(64, 16, 4, 18, False)}")
print(f"torch toy: {torch_count(16, 16, 1, 1, False, nc=10)}")


section("search space: largest L3 >= L1 with count <= 31.5M")
for c1 in (48, 64, 80):
    for cp in (16, 32):
        for l1 in range(1, 6):
            if c1 % cp:
                print(f"({c1},{cp},{l1}) -> invalid: C1 {c1} not divisible by C' {cp}")
                continue
            l3 = l1
            while model_params(c1, cp, l1, l3 + 1) <= 31.5e6:
                l3 += 1
            p = model_params(c1, cp, l1, l3)
            flag = "" if abs(p - 30e6) <= 1.5e6 else "  OUTSIDE 5%"
            print(f"({c1},{cp},{l1}) -> L3={l3} params={p}{flag}")


section("scaling")
for a, b in ((1.03, 1.40), (1.06, 1.38), (1.09, 1.36), (1.12, 1.34), (1.15, 1.32)):
    print(f"residual({a},{b}) = {a * b ** 1.99 - 2:.6f}")
for phi in (1, 2):
    print(f"phi={phi}: c1_cont={64 * 1.36 ** phi:.6f} depth_cont={30 * 1.09 ** phi:.6f}")
