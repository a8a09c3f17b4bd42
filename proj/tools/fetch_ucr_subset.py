#!/usr/bin/env python3
"""Fetch a small set of UCR datasets and write them in UCR tab-separated layout.

The aeon wheel bundles a handful of UCR archive problems in .ts form; this
script downloads the wheel with pip (no install) and converts the univariate,
equal-length classification problems into <root>/<Name>/<Name>_{TRAIN,TEST}.tsv.
"""
import argparse
import glob
import os
import subprocess
import sys
import tempfile
import zipfile

DATASETS = {
    # archive name -> name inside the wheel
    "GunPoint": "GunPoint",
    "ArrowHead": "ArrowHead",
    "OSULeaf": "OSULeaf",
    "ACSF1": "ACSF1",
    "PickupGestureWiimoteZ": "PickupGestureWiimoteZ_eq",
    "ItalyPowerDemand": "ItalyPowerDemand",
}


def convert_ts(text):
    rows = []
    in_data = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.lower().startswith("@data"):
            in_data = True
            continue
        if line.startswith("@") or not in_data:
            continue
        values, label = line.rsplit(":", 1)
        rows.append(label + "\t" + "\t".join(values.split(",")))
    return "\n".join(rows) + "\n"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "ucr"))
    parser.add_argument("--wheel", help="path to an already downloaded aeon wheel")
    args = parser.parse_args()

    wheel = args.wheel
    if wheel is None:
        tmp = tempfile.mkdtemp()
        subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps", "aeon", "-d", tmp])
        wheel = glob.glob(os.path.join(tmp, "aeon-*.whl"))[0]

    archive = zipfile.ZipFile(wheel)
    for name, inner in DATASETS.items():
        target = os.path.join(args.out, name)
        os.makedirs(target, exist_ok=True)
        for split in ("TRAIN", "TEST"):
            member = f"aeon/datasets/data/{inner.split('_')[0]}/{inner}_{split}.ts"
            text = archive.read(member).decode("utf-8", "replace")
            with open(os.path.join(target, f"{name}_{split}.tsv"), "w") as fh:
                fh.write(convert_ts(text))
        print(f"wrote {target}")


if __name__ == "__main__":
    main()
