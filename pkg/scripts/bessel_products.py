"""Per-order maxima of the Bessel product scans, written as CSV."""
import argparse
import csv
import sys

from coaxwave.specialfn import ProductKind, product_bound_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", choices=[k.value for k in ProductKind], default="JY")
    ap.add_argument("--m-max", type=int, default=200)
    ap.add_argument("--m-min", type=int, default=1)
    args = ap.parse_args()
    scan = product_bound_scan(ProductKind(args.kind), args.m_max, m_min=args.m_min)
    wr = csv.writer(sys.stdout, lineterminator="\n")
    wr.writerow(["kind", "m", "r", "q", "value"])
    wr.writerows(scan.rows)
    print(f"# sup {scan.value:.6f} at m={scan.m}, r={scan.r:.4f}, q={scan.q:.3f}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
