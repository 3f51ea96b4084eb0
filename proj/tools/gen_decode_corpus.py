"""Builds the decoder differential corpus from GNU objdump.

Every implemented opcode (as listed by `x86sim opcodes`) is swept over all 256
ModR/M values, with and without REX.W, plus sampled operand-size and REX.R/X/B
variants. Each encoding sits in a 32-byte slot padded with NOPs, the whole
stream is disassembled once, and the text at each slot start is normalized.

Output lines: <hex bytes> TAB <impl|unimpl> TAB <length> TAB <text>
where <text> is "(bad)" when objdump rejects the bytes.
"""
import argparse
import random
import re
import subprocess
import sys
import tempfile

SLOT = 32


def parse_opcode_table(x86sim):
    out = subprocess.run([x86sim, "opcodes"], check=True, capture_output=True, text=True).stdout
    rows = []
    for line in out.splitlines()[1:]:
        f = line.split()
        if f[0] == "0f":
            opmap, first, f = 2, int(f[1], 16), f[2:]
        else:
            opmap, first, f = 1, int(f[0], 16), f[1:]
        span, ext, mnem, operands, user = int(f[0]), f[1], f[2], f[3], f[4]
        rows.append({
            "map": opmap, "first": first, "span": span,
            "ext": None if ext == "-" else int(ext[1:]),
            "mnemonic": mnem,
            "operands": [] if operands == "-" else operands.split(","),
        })
    return rows


def needs_modrm(specs, has_ext):
    return has_ext or any(s[0] in "EGMRC" for s in specs)


def is_branch(specs, mnem):
    return any(s in ("Jb", "Jz") for s in specs) or mnem == "ret"


def tail_length(specs, mnem, opsize, modrm, sib):
    """Bytes after opcode/ModR/M/SIB, per the Intel encoding rules."""
    n = 0
    if modrm is not None and specs and "Rq" not in specs:
        mod, rm = modrm >> 6, modrm & 7
        if mod == 1:
            n += 1
        elif mod == 2:
            n += 4
        elif mod == 0 and rm == 5:
            n += 4
        elif mod == 0 and rm == 4 and sib is not None and (sib & 7) == 5:
            n += 4
    for s in specs:
        if s in ("Ib", "Jb"):
            n += 1
        elif s == "Iz":
            n += 2 if opsize == 2 else 4
        elif s == "Iv":
            n += opsize
        elif s == "Jz":
            n += 4
    return n


def implemented(row, modrm, rex):
    """Whether this ModR/M form falls inside the implemented row."""
    if modrm is None:
        return True
    mod, reg = modrm >> 6, (modrm >> 3) & 7
    specs = row["operands"]
    if row["ext"] is not None and row["ext"] != reg:
        return False
    if ("M" in specs or "Mp" in specs) and mod == 3:
        return False
    if "Rv" in specs and mod != 3:
        return False
    if "Cd" in specs:
        cr = reg | (8 if rex & 4 else 0)
        if cr not in (0, 2, 3, 4):
            return False
    return True


def encodings(rows, rng):
    by_opcode = {}
    for row in rows:
        for b in range(row["first"], row["first"] + row["span"]):
            by_opcode.setdefault((row["map"], b), []).append(row)

    for (opmap, byte), group in sorted(by_opcode.items()):
        specs_any = group[0]["operands"]
        has_ext = any(r["ext"] is not None for r in group)
        opcode = bytes([0x0F, byte]) if opmap == 2 else bytes([byte])
        modrm_sweep = needs_modrm(specs_any, has_ext)
        branch = any(is_branch(r["operands"], r["mnemonic"]) for r in group)

        prefix_sets = [(b"", 0, True), (b"\x48", 8, True)]
        for p in (b"\x66", b"\x41", b"\x44", b"\x42", b"\x4f"):
            if p == b"\x66" and branch:
                continue
            prefix_sets.append((p, p[0] & 0xF if p[0] != 0x66 else 0, False))

        modrms = range(256) if modrm_sweep else [None]
        for prefix, rex, full in prefix_sets:
            for modrm in modrms:
                if not full and modrm is not None and rng.random() > 0.15:
                    continue
                row = None
                if modrm is None:
                    row = group[0]
                else:
                    reg = (modrm >> 3) & 7
                    row = next((r for r in group if r["ext"] in (None, reg)), group[0])
                specs = row["operands"]
                if prefix == b"\x66":
                    opsize = 2
                elif rex & 8:
                    opsize = 8
                else:
                    opsize = 4
                body = bytearray(prefix + opcode)
                sib = None
                if modrm is not None:
                    body.append(modrm)
                    if (modrm >> 6) != 3 and (modrm & 7) == 4 and "Rq" not in specs:
                        sib = rng.randrange(256)
                        body.append(sib)
                tail = tail_length(specs, row["mnemonic"], opsize, modrm, sib)
                body += bytes(rng.randrange(256) for _ in range(tail))
                yield bytes(body), implemented(row, modrm, rex)


def run_objdump(blob):
    with tempfile.NamedTemporaryFile(suffix=".bin") as f:
        f.write(blob)
        f.flush()
        out = subprocess.run(
            ["objdump", "-D", "-b", "binary", "-mi386:x86-64", "-M", "intel", "-w", f.name],
            check=True, capture_output=True, text=True).stdout
    lines = {}
    pat = re.compile(r"^\s*([0-9a-f]+):\t((?:[0-9a-f]{2} )+)\s*\t?(.*)$")
    for line in out.splitlines():
        m = pat.match(line)
        if m:
            addr = int(m.group(1), 16)
            nbytes = len(m.group(2).split())
            lines[addr] = (nbytes, m.group(3).strip())
    return lines


MNEMONIC_ALIASES = {
    "movabs": "mov",
    "sysretq": "sysret", "sysretd": "sysret", "sysretl": "sysret",
    "pushw": "push", "pushq": "push", "popw": "pop", "popq": "pop",
}

BRANCHES = {"call", "jmp", "jo", "jno", "jb", "jae", "je", "jne", "jbe", "ja",
            "js", "jns", "jp", "jnp", "jl", "jge", "jle", "jg"}


def normalize(text, base=0):
    """Canonical text; branch targets are made relative to `base`."""
    text = text.split("#")[0].strip().lower()
    if text.startswith("(bad)"):
        return "(bad)"
    words = text.split(None, 1)
    while words and (words[0].startswith("rex") or words[0] in ("data16", "addr32")):
        text = words[1] if len(words) > 1 else ""
        words = text.split(None, 1)
    if not words:
        return "(bad)"
    mnem = MNEMONIC_ALIASES.get(words[0], words[0])
    if len(words) == 1:
        return mnem
    if mnem in BRANCHES and re.fullmatch(r"0x[0-9a-f]+", words[1].strip()):
        return mnem + " " + hex((int(words[1], 16) - base) % (1 << 64))
    ops = []
    for op in words[1].split(","):
        op = op.strip()
        op = re.sub(r"\+riz\*\d", "", op)
        op = re.sub(r"riz\*\d\+?", "", op)
        m = re.match(r"^((?:\w+ ptr )?)(?:(fs|gs):)?ds:(0x[0-9a-f]+)$", op)
        if m:
            op = m.group(1) + (m.group(2) + ":" if m.group(2) else "") + "[" + m.group(3) + "]"
        m = re.match(r"^((?:\w+ ptr )?)(fs|gs):(0x[0-9a-f]+)$", op)
        if m:
            op = m.group(1) + m.group(2) + ":[" + m.group(3) + "]"
        m = re.search(r"rip\+0x([0-9a-f]{16})\]", op)
        if m and int(m.group(1), 16) >= 1 << 63:
            op = op[:m.start()] + "rip-" + hex((1 << 64) - int(m.group(1), 16)) + "]"
        m = re.search(r"\[-0x([0-9a-f]+)\]", op)
        if m:
            op = op[:m.start()] + "[" + hex((1 << 64) - int(m.group(1), 16)) + "]"
        if re.fullmatch(r"\d+", op):
            op = hex(int(op))
        ops.append(op)
    return mnem + " " + ",".join(ops)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("x86sim")
    ap.add_argument("output")
    ap.add_argument("--seed", type=int, default=20240517)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    entries = list(encodings(parse_opcode_table(args.x86sim), rng))
    blob = bytearray()
    for enc, _ in entries:
        assert len(enc) <= 16
        blob += enc + b"\x90" * (SLOT - len(enc))
    decoded = run_objdump(bytes(blob))

    with open(args.output, "w") as out:
        out.write("# bytes\texpect\tlength\ttext (objdump -M intel, normalized)\n")
        for i, (enc, impl) in enumerate(entries):
            nbytes, text = decoded.get(i * SLOT, (0, "(desync)"))
            norm = normalize(text, i * SLOT)
            if enc[-1] == 0x90 and norm == "xchg eax,eax":
                norm = "nop"
            if norm == "(bad)":
                nbytes = 0
            out.write(f"{enc.hex()}\t{'impl' if impl else 'unimpl'}\t{nbytes}\t{norm}\n")
    print(f"{len(entries)} encodings", file=sys.stderr)


if __name__ == "__main__":
    main()
