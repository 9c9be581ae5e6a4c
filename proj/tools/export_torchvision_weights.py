#!/usr/bin/env python3
"""Convert torchvision classification weights to the bcstage tensor container.

  pretrained  write ImageNet weights to <out>/<arch>.bin (needs network or a
              populated torch hub cache)
  fixture     write a random-init model with a 5-way head plus an input batch
              and its expected logits, for C++ forward-parity checks
"""

import argparse
import hashlib
import pathlib
import struct
import sys

import torch

ARCHITECTURES = {
    "resnet18": ("resnet18", "ResNet18_Weights"),
    "resnet50": ("resnet50", "ResNet50_Weights"),
    "resnet152": ("resnet152", "ResNet152_Weights"),
    "efficientnet_v2_m": ("efficientnet_v2_m", "EfficientNet_V2_M_Weights"),
    "convnext_base": ("convnext_base", "ConvNeXt_Base_Weights"),
    "wide_resnet101_2": ("wide_resnet101_2", "Wide_ResNet101_2_Weights"),
    "vgg16": ("vgg16", "VGG16_Weights"),
    "resnext101_32x8d": ("resnext101_32x8d", "ResNeXt101_32X8D_Weights"),
    "regnet_x_32gf": ("regnet_x_32gf", "RegNet_X_32GF_Weights"),
    "swin_b": ("swin_b", "Swin_B_Weights"),
    "maxvit_t": ("maxvit_t", "MaxVit_T_Weights"),
}

DTYPES = {torch.float32: 0, torch.float64: 1, torch.int64: 2}


def encode(tensors):
    out = bytearray(b"BCSW")
    out += struct.pack("<IQ", 1, len(tensors))
    for name, t in tensors:
        t = t.detach().cpu().contiguous()
        raw = t.numpy().tobytes()
        key = name.encode()
        out += struct.pack("<I", len(key)) + key
        out += struct.pack("<BI", DTYPES[t.dtype], t.dim())
        out += struct.pack(f"<{t.dim()}q", *t.shape)
        out += struct.pack("<Q", len(raw)) + raw
    return bytes(out)


def write(path, tensors):
    data = encode(tensors)
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def build(arch, **kwargs):
    import torchvision

    factory, _ = ARCHITECTURES[arch]
    return getattr(torchvision.models, factory)(**kwargs)


def cmd_pretrained(args):
    import torchvision

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for arch in args.arch:
        _, weights_enum = ARCHITECTURES[arch]
        weights = getattr(torchvision.models, weights_enum).IMAGENET1K_V1
        model = build(arch, weights=weights)
        digest = write(out / f"{arch}.bin", list(model.state_dict().items()))
        print(f"{arch}: {digest}")


def cmd_fixture(args):
    torch.manual_seed(args.seed)
    model = build(args.arch, num_classes=5).eval()
    x = torch.randn(args.batch, 3, args.size, args.size)
    with torch.no_grad():
        y = model(x)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write(out / "weights.bin", list(model.state_dict().items()))
    write(out / "io.bin", [("input", x), ("output", y)])


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("pretrained")
    p.add_argument("--arch", nargs="+", choices=sorted(ARCHITECTURES), default=sorted(ARCHITECTURES))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pretrained)
    f = sub.add_parser("fixture")
    f.add_argument("--arch", required=True, choices=sorted(ARCHITECTURES))
    f.add_argument("--out", required=True)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--batch", type=int, default=2)
    f.add_argument("--size", type=int, default=224)
    f.set_defaults(func=cmd_fixture)
    args = parser.parse_args()
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
