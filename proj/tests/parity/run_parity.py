#!/usr/bin/env python3
"""Forward parity of every C++ architecture against torchvision.

Exits 77 (ctest skip) when torchvision is not importable.
"""

import pathlib
import shutil
import subprocess
import sys
import tempfile

ARCHITECTURES = [
    "resnet18",
    "resnet50",
    "resnet152",
    "efficientnet_v2_m",
    "convnext_base",
    "wide_resnet101_2",
    "vgg16",
    "resnext101_32x8d",
    "regnet_x_32gf",
    "swin_b",
    "maxvit_t",
]


def main():
    checker, exporter = sys.argv[1], sys.argv[2]
    archs = sys.argv[3:] or ARCHITECTURES
    try:
        import torchvision  # noqa: F401
    except ImportError:
        print("SKIP torchvision unavailable")
        return 77
    failures = 0
    for arch in archs:
        work = pathlib.Path(tempfile.mkdtemp(prefix=f"bcstage_parity_{arch}_"))
        try:
            subprocess.run([sys.executable, exporter, "fixture", "--arch", arch, "--out", str(work)], check=True)
            result = subprocess.run([checker, arch, str(work)])
            failures += result.returncode != 0
        finally:
            shutil.rmtree(work, ignore_errors=True)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
