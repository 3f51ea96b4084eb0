"""Summarizes an ELF file as JSON using readelf and nm output."""
import json
import re
import subprocess
import sys


def run(*args):
    return subprocess.run(args, check=True, capture_output=True, text=True).stdout


def main(path):
    header = run("readelf", "-hW", path)
    entry = int(re.search(r"Entry point address:\s+(0x[0-9a-f]+)", header).group(1), 16)
    segments = []
    for line in run("readelf", "-lW", path).splitlines():
        fields = line.split()
        if not fields or fields[0] != "LOAD":
            continue
        offset, vaddr, _paddr, filesz, memsz = (int(f, 16) for f in fields[1:6])
        flags = "".join(fields[6:-1])
        segments.append({"offset": offset, "vaddr": vaddr, "filesz": filesz,
                         "memsz": memsz, "flags": flags})
    symbols = {}
    for line in run("nm", path).splitlines():
        fields = line.split()
        if len(fields) == 3:
            symbols[fields[2]] = int(fields[0], 16)
    json.dump({"entry": entry, "segments": segments, "symbols": symbols}, sys.stdout,
              indent=2, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
