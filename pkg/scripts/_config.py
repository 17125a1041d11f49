"""Dataclass configs with command-line overrides for the experiment scripts."""
from __future__ import annotations

import argparse
import dataclasses
import json


def parse_config(cls, description: str | None = None, argv=None):
    """Build ``cls`` from its defaults, overridden by ``--field value`` flags."""
    ap = argparse.ArgumentParser(description=description or cls.__doc__)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        kind = type(default)
        if kind is bool:
            ap.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, action=argparse.BooleanOptionalAction,
                            default=default)
        elif kind in (list, tuple):
            item = type(default[0]) if default else str
            ap.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=item, nargs="+", default=default)
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=kind, default=default)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    ns = vars(ap.parse_args(argv))
    as_json = ns.pop("json")
    return cls(**ns), as_json


def emit(rows: list[dict], as_json: bool) -> None:
    if as_json:
        print(json.dumps(rows, indent=2, ensure_ascii=False))
        return
    if not rows:
        return
    cols = list(rows[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for r in rows:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in cols))
