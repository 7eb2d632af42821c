#!/usr/bin/env python3
"""Build replay fixtures from a manifest of canned provider responses.

usage: provider_fixtures.py MANIFEST OUT_DIR

MANIFEST is JSON: a list of entries
  {"provider": "gallica", "endpoint": "https://...", "params": [[k, v], ...],
   "status": 200 | "TIMEOUT", "body": "relative/path" | null}
Each entry becomes OUT_DIR/<provider>/<sha256("GET " + url)>.resp.
Query strings are form-encoded the same way the Rust clients encode them.
"""

import hashlib
import json
import os
import sys
from urllib.parse import quote_plus


def encode(params):
    return "&".join(f"{quote_plus(k, safe='*')}={quote_plus(v, safe='*')}" for k, v in params)


def main(manifest_path, out_dir):
    base = os.path.dirname(os.path.abspath(manifest_path))
    with open(manifest_path, encoding="utf-8") as f:
        entries = json.load(f)
    for e in entries:
        url = e["endpoint"] + "?" + encode(e["params"])
        key = hashlib.sha256(f"GET {url}".encode()).hexdigest()
        body = ""
        if e.get("body"):
            with open(os.path.join(base, e["body"]), encoding="utf-8") as f:
                body = f.read()
        target = os.path.join(out_dir, e["provider"])
        os.makedirs(target, exist_ok=True)
        with open(os.path.join(target, key + ".resp"), "w", encoding="utf-8", newline="\n") as f:
            f.write(f"{e['status']} {url}\n\n{body}")
        print(key, url)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
