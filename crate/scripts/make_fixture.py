#!/usr/bin/env python3
"""Build the committed case-count fixture in the JHU CSSE global wire format.

The sandbox that produced this repository had no route to the CSSE GitHub
repository, so the fixture is a reconstruction: approximate cumulative
confirmed totals for India, US and Brazil at roughly five-day anchors
(Jan 22 - Aug 15 2020) are interpolated monotonically in log(1 + x) space,
daily increments are modulated by a weekly reporting cycle and multiplicative
log-normal noise (fixed seed), and each inter-anchor segment is renormalised
so the cumulative series passes exactly through every anchor.

Run once; the output is committed. Replace it with the real file by passing
`--data` to the CLI.
"""

import csv
import datetime as dt
import sys

import numpy as np
from scipy.interpolate import PchipInterpolator

SEED = 20200815
NOISE_SIGMA = 0.10
# Monday .. Sunday
WEEKLY = [0.92, 0.97, 1.02, 1.04, 1.05, 1.03, 0.97]

START = dt.date(2020, 1, 22)
END = dt.date(2020, 8, 15)

ANCHORS = {
    "India": (20.593684, 78.96288, [
        ("01-22", 0), ("01-29", 0), ("01-30", 1), ("02-02", 2), ("02-03", 3), ("03-01", 3),
        ("03-02", 5), ("03-04", 28), ("03-10", 56), ("03-15", 113), ("03-20", 244),
        ("03-25", 657), ("03-31", 1397), ("04-05", 4778), ("04-10", 7600),
        ("04-15", 12322), ("04-20", 18539), ("04-25", 26283), ("04-30", 34863),
        ("05-05", 49400), ("05-10", 67161), ("05-15", 85784), ("05-20", 112028),
        ("05-25", 144950), ("05-31", 190609), ("06-05", 236184), ("06-10", 287155),
        ("06-15", 343091), ("06-20", 410451), ("06-25", 473105), ("06-30", 566840),
        ("07-05", 673165), ("07-10", 820916), ("07-15", 968876), ("07-20", 1155191),
        ("07-25", 1385522), ("07-30", 1638870), ("08-05", 1964536), ("08-10", 2268675),
        ("08-15", 2589682),
    ]),
    "US": (40.0, -100.0, [
        ("01-22", 1), ("01-26", 5), ("02-01", 8), ("02-10", 11), ("02-21", 15),
        ("02-29", 24), ("03-05", 217), ("03-10", 959), ("03-15", 3680), ("03-20", 19100),
        ("03-25", 65778), ("03-31", 188172), ("04-05", 337072), ("04-10", 496535),
        ("04-15", 636350), ("04-20", 784326), ("04-25", 938154), ("04-30", 1069424),
        ("05-05", 1204351), ("05-10", 1329260), ("05-15", 1442824), ("05-20", 1551853),
        ("05-25", 1662302), ("05-31", 1790191), ("06-05", 1920061), ("06-10", 2000702),
        ("06-15", 2114026), ("06-20", 2255119), ("06-25", 2422310), ("06-30", 2636538),
        ("07-05", 2888635), ("07-10", 3184573), ("07-15", 3499291), ("07-20", 3831405),
        ("07-25", 4178970), ("07-31", 4562038), ("08-05", 4823890), ("08-10", 5085821),
        ("08-15", 5313252),
    ]),
    "Brazil": (-14.235, -51.9253, [
        ("01-22", 0), ("02-25", 0), ("02-26", 1), ("02-29", 2), ("03-05", 8),
        ("03-10", 31), ("03-15", 162), ("03-20", 904), ("03-25", 2554), ("03-31", 5717),
        ("04-05", 11130), ("04-10", 19638), ("04-15", 28320), ("04-20", 40743),
        ("04-25", 59324), ("04-30", 87187), ("05-05", 115455), ("05-10", 162699),
        ("05-15", 220291), ("05-20", 291579), ("05-25", 374898), ("05-31", 514849),
        ("06-05", 645771), ("06-10", 772416), ("06-15", 888271), ("06-20", 1067579),
        ("06-25", 1228114), ("06-30", 1402041), ("07-05", 1603055), ("07-10", 1800827),
        ("07-15", 1966748), ("07-20", 2118646), ("07-25", 2394513), ("07-31", 2662485),
        ("08-05", 2859073), ("08-10", 3057470), ("08-15", 3317096),
    ]),
}


def day_index(md):
    m, d = (int(x) for x in md.split("-"))
    return (dt.date(2020, m, d) - START).days


def build(anchors, rng):
    n = (END - START).days + 1
    xs = np.array([day_index(md) for md, _ in anchors], dtype=float)
    ys = np.array([v for _, v in anchors], dtype=float)
    smooth = np.expm1(PchipInterpolator(xs, np.log1p(ys))(np.arange(n)))
    base = np.diff(smooth, prepend=smooth[0]).clip(min=0.0)
    weights = np.empty(n)
    for i in range(n):
        weekday = (START + dt.timedelta(days=i)).weekday()
        weights[i] = base[i] * WEEKLY[weekday] * np.exp(rng.normal(0.0, NOISE_SIGMA))

    cum = np.zeros(n)
    cum[0] = ys[0]
    for (a, va), (b, vb) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        a, b = int(a), int(b)
        seg = weights[a + 1 : b + 1]
        total = vb - va
        if total <= 0 or seg.sum() <= 0:
            shares = np.full(b - a, total / (b - a)) if total > 0 else np.zeros(b - a)
        else:
            shares = seg / seg.sum() * total
        cum[a + 1 : b + 1] = va + np.cumsum(shares)
    return np.rint(cum).astype(np.int64)


def main(out):
    rng = np.random.default_rng(SEED)
    n = (END - START).days + 1
    dates = [START + dt.timedelta(days=i) for i in range(n)]
    header = ["Province/State", "Country/Region", "Lat", "Long"] + [
        f"{d.month}/{d.day}/{d.year % 100}" for d in dates
    ]
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for country in sorted(ANCHORS):
            lat, lon, anchors = ANCHORS[country]
            values = build(anchors, rng)
            assert len(values) == n
            w.writerow(["", country, lat, lon] + [int(v) for v in values])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/confirmed_global_fixture.csv")
