"""Write every built-in CLI input to demos/inputs/<command>-<name>.json."""

import json
import os

from floerkit import catalog

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "inputs")


def main():
    os.makedirs(OUT, exist_ok=True)
    for cmd in sorted(catalog.CATALOG):
        for name in catalog.names(cmd):
            path = os.path.join(OUT, f"{cmd}-{name}.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(catalog.get(cmd, name), fh, indent=1, sort_keys=True)
                fh.write("\n")
            print(path)


if __name__ == "__main__":
    main()
