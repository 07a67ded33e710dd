"""Regenerate docs/api.json from the live FastAPI application."""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from vca.service import create_app


def main() -> None:
    doc = create_app().openapi()
    out = os.path.join(os.path.dirname(__file__), "..", "docs", "api.json")
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {os.path.normpath(out)} ({len(doc.get('paths', {}))} paths)")


if __name__ == "__main__":
    main()
