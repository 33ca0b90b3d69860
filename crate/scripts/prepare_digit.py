#!/usr/bin/env python3
"""Convert the UCI Multiple Features (handwritten digits) CSVs into the
paired manifest layout read by `umc unpair`.

The CSVs ship inside the `mvlearn` wheel (mvlearn/datasets/UCImultifeature).
Usage: scripts/prepare_digit.py <dir-with-mfeat-csvs> <out-dir>
"""
import csv
import os
import sys

VIEWS = ["fou", "fac", "kar", "pix", "zer", "mor"]


def main():
    src, out = sys.argv[1], sys.argv[2]
    os.makedirs(out, exist_ok=True)
    labels = None
    dims = []
    for v, name in enumerate(VIEWS):
        with open(os.path.join(src, f"mfeat-{name}.csv"), newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        view_labels = [int(r[-1]) for r in rows]
        if labels is None:
            labels = view_labels
        assert labels == view_labels, f"label order differs in view {name}"
        dims.append(len(rows[0]) - 1)
        with open(os.path.join(out, f"view{v}_{name}.csv"), "w", newline="\n") as fh:
            for i, r in enumerate(rows):
                fh.write(",".join([str(i)] + r[:-1]) + "\n")
    with open(os.path.join(out, "labels.csv"), "w", newline="\n") as fh:
        for i, c in enumerate(labels):
            fh.write(f"{i},{c}\n")
    with open(os.path.join(out, "manifest.toml"), "w", newline="\n") as fh:
        fh.write('name = "digit"\nk = 10\npaired = true\nlabels = "labels.csv"\n')
        for v, (name, d) in enumerate(zip(VIEWS, dims)):
            fh.write(f'\n[[views]]\nid = {v}\nfeatures = "view{v}_{name}.csv"\ndim = {d}\n')


if __name__ == "__main__":
    main()
