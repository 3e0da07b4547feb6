#!/usr/bin/env python3
"""Fetch the hamster-friendship network and extract its largest component.

Downloads the public KONECT dataset, keeps the biggest connected component
(1788 nodes, 12476 edges) and writes it to data/hamsterster_lcc.edges in
the package's edge-list format.  Needs internet access; run once and commit
the result.
"""

import io
import sys
import tarfile
import urllib.request
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from nodeleak.graph import (largest_connected_component, load_edge_list_stats,
                            save_edge_list)

URL = "http://konect.cc/files/download.tsv.petster-friendships-hamster.tar.bz2"
OUT = Path(__file__).resolve().parent.parent / "data" / "hamsterster_lcc.edges"


def main() -> int:
    print(f"downloading {URL} ...")
    with urllib.request.urlopen(URL, timeout=120) as response:
        payload = response.read()
    with tarfile.open(fileobj=io.BytesIO(payload), mode="r:bz2") as tar:
        member = next(m for m in tar.getmembers()
                      if m.name.endswith("out.petster-friendships-hamster"))
        text = tar.extractfile(member).read().decode("utf-8")
    g, stats = load_edge_list_stats(io.StringIO(text))
    print(f"parsed {g.n_nodes} nodes / {g.n_edges} edges "
          f"({stats.dropped} duplicate or self-loop lines dropped)")
    lcc = largest_connected_component(g)
    print(f"largest component: {lcc.n_nodes} nodes / {lcc.n_edges} edges")
    if (lcc.n_nodes, lcc.n_edges) != (1788, 12476):
        print("warning: component size differs from the expected "
              "1788 / 12476; the upstream file may have changed",
              file=sys.stderr)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    save_edge_list(lcc, OUT)
    print(f"wrote {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
