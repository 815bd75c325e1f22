#!/usr/bin/env python3
"""Export the scikit-learn bundled tabular datasets used by the benchmark harness.

Writes data/breast_cancer.csv, data/wine.csv and data/diabetes.csv with a
header row and the target in the last column named `target`. The bundled
copies ship with scikit-learn, so no network access is needed.
"""
import csv
import pathlib

from sklearn import datasets

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def export(name, bunch, integer_target):
    OUT.mkdir(exist_ok=True)
    names = [n.replace(" ", "_") for n in bunch.feature_names]
    path = OUT / f"{name}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["target"])
        for row, t in zip(bunch.data, bunch.target):
            cells = [repr(float(v)) for v in row]
            cells.append(str(int(t)) if integer_target else repr(float(t)))
            w.writerow(cells)
    print(f"{path}: {bunch.data.shape[0]} rows, {bunch.data.shape[1]} features")


if __name__ == "__main__":
    export("breast_cancer", datasets.load_breast_cancer(), True)
    export("wine", datasets.load_wine(), True)
    export("diabetes", datasets.load_diabetes(), False)
