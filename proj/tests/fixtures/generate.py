#!/usr/bin/env python3
"""Regenerates the binary and tabular test fixtures.

The MRC files are assembled field by field with `struct` following the
MRC2014 header layout, and the NPY files come from numpy.save, so neither
depends on the C++ code they are used to test. Expected values derived here
are written to expected.json.
"""
import bz2
import fnmatch
import hashlib
import json
import shutil
import pathlib
import random
import struct

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent


def mrc_bytes(data, mode, endian="<", stamp=b"\x44\x44\x00\x00", voxel=1.0, labels=("fixture",)):
    nz, ny, nx = data.shape
    e = endian
    words = struct.pack(e + "10i", nx, ny, nz, mode, 0, 0, 0, nx, ny, nz)
    words += struct.pack(e + "6f", nx * voxel, ny * voxel, nz * voxel, 90.0, 90.0, 90.0)
    words += struct.pack(e + "3i", 1, 2, 3)
    d = data.astype(np.float64)
    words += struct.pack(e + "3f", d.min(), d.max(), d.mean())
    words += struct.pack(e + "2i", 0, 0)                 # ISPG, NSYMBT
    words += b"\x00" * 8                                 # EXTRA 25-26
    words += b"\x00\x00\x00\x00"                         # EXTTYP
    words += struct.pack(e + "i", 20140)                 # NVERSION
    words += b"\x00" * (196 - 112)                       # EXTRA 29-49
    words += struct.pack(e + "3f", 0.0, 0.0, 0.0)        # ORIGIN
    words += b"MAP " + stamp
    words += struct.pack(e + "f", d.std())
    words += struct.pack(e + "i", len(labels))
    for i in range(10):
        text = labels[i].encode() if i < len(labels) else b""
        words += text.ljust(80, b" " if i < len(labels) else b"\x00")
    assert len(words) == 1024, len(words)
    dtype = {0: "i1", 1: "i2", 2: "f4", 6: "u2", 12: "f2"}[mode]
    return words + data.astype(np.dtype(e + dtype)).tobytes()


def write(path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(payload)


def main():
    expected = {}

    golden = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
    write(HERE / "mrc/golden_4x4_mode2.mrc", mrc_bytes(golden, 2))
    write(HERE / "mrc/golden_4x4_mode2_be.mrc", mrc_bytes(golden, 2, ">", b"\x11\x11\x00\x00"))
    expected["golden_4x4_mode2"] = {
        "shape": [1, 4, 4], "dmin": 0.0, "dmax": 15.0, "dmean": float(golden.mean()),
        "rms": float(golden.astype(np.float64).std()), "values": golden.ravel().tolist(),
    }

    write(HERE / "mrc/zeros_2x2x2.mrc", mrc_bytes(np.zeros((2, 2, 2), np.float32), 2))

    int16 = (np.arange(24, dtype=np.int16).reshape(2, 3, 4) - 12) * 1000
    write(HERE / "mrc/int16_2x3x4_be.mrc", mrc_bytes(int16, 1, ">", b"\x11\x11\x00\x00", voxel=1.5))
    expected["int16_2x3x4"] = {"shape": [2, 3, 4], "values": int16.ravel().tolist(), "voxel": 1.5}

    half = (np.arange(12, dtype=np.float16).reshape(1, 3, 4) / np.float16(4))
    write(HERE / "mrc/half_3x4_mode12.mrc", mrc_bytes(half, 12))
    expected["half_3x4_mode12"] = {"values": [float(x) for x in half.ravel()]}

    bad = bytearray(mrc_bytes(golden, 2))
    bad[12:16] = struct.pack("<i", 99)
    write(HERE / "mrc/mode99.mrc", bytes(bad))

    f32 = (np.arange(12, dtype=np.float32).reshape(3, 4) * 0.5 - 1.0)
    np.save(HERE / "npy/f32_3x4.npy", f32)
    expected["f32_3x4"] = {"shape": [3, 4], "values": f32.ravel().tolist()}
    i16 = np.arange(-3, 3, dtype=np.int16).reshape(1, 2, 3)
    np.save(HERE / "npy/i16_1x2x3.npy", i16)
    expected["i16_1x2x3"] = {"shape": [1, 2, 3], "values": i16.ravel().tolist()}
    np.save(HERE / "npy/u8_5.npy", np.arange(5, dtype=np.uint8))
    np.save(HERE / "npy/f64_2x2x2.npy", np.linspace(0.0, 1.0, 8).reshape(2, 2, 2))
    expected["f64_2x2x2"] = {"values": np.linspace(0.0, 1.0, 8).tolist()}
    np.save(HERE / "npy/fortran_2x3.npy", np.asfortranarray(np.ones((2, 3), np.float32)))
    np.save(HERE / "npy/f4_be_2x2.npy", np.array([[1.0, 2.0], [3.0, 4.0]], dtype=">f4"))

    # RELION 3.1 style particle file: optics block plus particles block.
    rows = []
    for i in range(4):
        rows.append((f"{i + 1:06d}@Extract/job007/Movies/mic_{i // 2:03d}.mrcs",
                     f"Movies/mic_{i // 2:03d}.mrc", f"{100.5 + i * 10:.6f}",
                     f"{200.25 - i * 5:.6f}", f"{(i * 37) % 360:.6f}", "1"))
    lines = ["", "# version 30001", "", "data_optics", "", "loop_",
             "_rlnOpticsGroupName #1", "_rlnOpticsGroup #2", "_rlnMicrographPixelSize #3",
             "_rlnVoltage #4", "opticsGroup1            1     0.885000   300.000000", "",
             "", "# version 30001", "", "data_particles", "", "loop_",
             "_rlnImageName #1", "_rlnMicrographName #2", "_rlnCoordinateX #3",
             "_rlnCoordinateY #4", "_rlnAnglePsi #5", "_rlnOpticsGroup #6"]
    for r in rows:
        lines.append("  ".join(r))
    lines.append("")
    (HERE / "star/relion_particles.star").write_text("\n".join(lines) + "\n")
    expected["relion_particles"] = {
        "image_names": [r[0] for r in rows],
        "coordinate_x": [float(r[2]) for r in rows],
    }

    structures(expected)
    server_tree(expected)
    glob_cases(expected)
    datasets(expected)

    (HERE / "expected.json").write_text(json.dumps(expected, indent=1) + "\n")


def pdb_atom(record, serial, name, res, chain, seq, x, y, z, occ, b, element):
    """One 80-column record placed field by field at its 1-based columns."""
    line = [" "] * 80

    def put(first, text):
        line[first - 1:first - 1 + len(text)] = text

    put(1, record.ljust(6))
    put(7, str(serial).rjust(5))
    put(13, name)
    put(18, res.rjust(3))
    put(22, chain)
    put(23, str(seq).rjust(4))
    put(31, f"{x:8.3f}")
    put(39, f"{y:8.3f}")
    put(47, f"{z:8.3f}")
    put(55, f"{occ:6.2f}")
    put(61, f"{b:6.2f}")
    put(77, element.rjust(2))
    return "".join(line)


def structures(expected):
    out = HERE / "structures"
    out.mkdir(exist_ok=True)

    two = [pdb_atom("ATOM", 1, " N  ", "MET", "A", 1, 11.104, 6.134, -6.504, 1.0, 25.5, "N"),
           pdb_atom("ATOM", 2, " CA ", "MET", "A", 1, 11.639, 6.071, -5.147, 1.0, 24.75, "C")]
    (out / "two_atoms.pdb").write_text("\n".join(two + ["END"]) + "\n")

    # Twelve atoms, five hydrogens, element columns left blank so the
    # atom-name heuristic decides.
    names = [" N  ", " CA ", " C  ", " O  ", " CB ", " H  ", " HA ", "1HB ", "2HB ", "HG21",
             " OG ", " SD "]
    rows = []
    for i, n in enumerate(names):
        r = pdb_atom("ATOM", i + 1, n, "SER", "A", 1 + i // 6, 1.0 * i, -0.5 * i, 2.25, 1.0, 10.0, "")
        rows.append(r[:76].rstrip())
    (out / "hydrogens_12.pdb").write_text("\n".join(rows + ["END"]) + "\n")
    expected["hydrogens_12"] = {"atoms": len(names),
                                "hydrogens": sum(1 for n in names if n.strip().lstrip("0123456789")[0] == "H")}

    # Stand-in for 1Q6U: chain A residues 1..50 (four heavy atoms and one
    # hydrogen each), a three-atom ligand, three waters and an ANISOU record.
    lines = ["HEADER    ISOMERASE                               15-AUG-03   1Q6U              ",
             "REMARK   2 RESOLUTION.    1.97 ANGSTROMS.                                       "]
    serial = 1
    atoms = []
    for seq in range(1, 51):
        for name, el in ((" N  ", "N"), (" CA ", "C"), (" C  ", "C"), (" O  ", "O"), (" H  ", "H")):
            atoms.append(("ATOM", serial, name, "ALA", "A", seq, el))
            serial += 1
    for name, el in ((" C1 ", "C"), (" O1 ", "O"), (" N2 ", "N")):
        atoms.append(("HETATM", serial, name, "NAG", "A", 101, el))
        serial += 1
    for k in range(3):
        atoms.append(("HETATM", serial, " O  ", "HOH", "A", 201 + k, "O"))
        serial += 1
    for i, (rec, ser, name, res, ch, seq, el) in enumerate(atoms):
        lines.append(pdb_atom(rec, ser, name, res, ch, seq, 0.1 * i, 20.0 - 0.2 * i,
                              -3.0 + 0.05 * i, 1.0, 15.0 + i % 7, el))
        if i == 0:
            lines.append("ANISOU    1  N   ALA A   1     2406   1892   1614    198    519   -303       N  ")
    lines += ["TER     " + str(serial).rjust(3), "CONECT  251  252", "END"]
    (out / "1q6u.pdb").write_text("\n".join(lines) + "\n")
    expected["1q6u"] = {
        "atoms": len(atoms),
        "hydrogens": sum(1 for a in atoms if a[6] == "H"),
        "waters": 3,
        "hetatm": sum(1 for a in atoms if a[0] == "HETATM"),
        "residues_le_25": sum(1 for a in atoms if a[5] <= 25),
    }

    cif = """data_4V1W
#
_entry.id 4V1W
#
_struct.title 'Stand-in for a large ribosome assembly'
#
loop_
_atom_site.group_PDB
_atom_site.id
_atom_site.type_symbol
_atom_site.label_atom_id
_atom_site.label_alt_id
_atom_site.label_comp_id
_atom_site.label_asym_id
_atom_site.label_seq_id
_atom_site.pdbx_PDB_ins_code
_atom_site.Cartn_x
_atom_site.Cartn_y
_atom_site.Cartn_z
_atom_site.occupancy
_atom_site.B_iso_or_equiv
_atom_site.pdbx_formal_charge
_atom_site.auth_seq_id
_atom_site.auth_comp_id
_atom_site.auth_asym_id
_atom_site.auth_atom_id
_atom_site.pdbx_PDB_model_num
ATOM   1 N N     . MET A 1 ? 10.000 11.000 12.000 1.00 30.00 ? 1   MET A N     1
ATOM   2 C CA    . MET A 1 ? 11.000 11.500 12.250 1.00 31.00 ? 1   MET A CA    1
ATOM   3 H H     . MET A 1 ? 9.500  10.500 12.000 1.00 32.00 ? 1   MET A H     1
ATOM   4 P P     . G   B 1 ? 20.000 21.000 22.000 1.00 40.00 ? 1   G   B P     1
ATOM   5 O "O5'" . G   B 1 ? 20.500 21.500 22.500 1.00 41.00 ? 1   G   B "O5'" 1
HETATM 6 MG MG   . MG  C . ? 30.000 31.000 32.000 1.00 50.00 ? 101 MG  B MG    1
HETATM 7 O O     . HOH D . ? 35.000 36.000 37.000 1.00 55.00 ? 201 HOH B O     1
#
loop_
_atom_type.symbol
C
H
MG
N
O
P
#
"""
    (out / "4v1w.cif").write_text(cif)
    truncated = cif.replace("HETATM 7 O O     . HOH D . ? 35.000 36.000 37.000 1.00 55.00 ? 201 HOH B O     1",
                            "HETATM 7 O O     . HOH D . ? 35.000 36.000")
    (out / "truncated.cif").write_text(truncated)
    expected["4v1w"] = {"atoms": 7, "hetatm": 2, "hydrogens": 1, "waters": 1}


def small_pdb(idcode, residues, chain="A"):
    lines = [f"HEADER    STRUCTURE FIXTURE                       01-JAN-22   {idcode}              "]
    serial = 1
    for seq in range(1, residues + 1):
        for name, el in ((" N  ", "N"), (" CA ", "C"), (" C  ", "C"), (" O  ", "O")):
            lines.append(pdb_atom("ATOM", serial, name, "GLY", chain, seq, 1.5 * serial, 0.5 * seq, -1.0, 1.0, 20.0, el))
            serial += 1
    return "\n".join(lines + ["END"]) + "\n"


def small_cif(block, residues):
    rows = []
    serial = 1
    for seq in range(1, residues + 1):
        for name, el in (("N", "N"), ("CA", "C"), ("C", "C"), ("O", "O")):
            rows.append(f"ATOM {serial} {el} {name} . GLY A {seq} ? {1.5 * serial:.3f} {0.5 * seq:.3f} -1.000 1.00 20.00 ? {seq} GLY A {name} 1")
            serial += 1
    cols = ["group_PDB", "id", "type_symbol", "label_atom_id", "label_alt_id", "label_comp_id",
            "label_asym_id", "label_seq_id", "pdbx_PDB_ins_code", "Cartn_x", "Cartn_y", "Cartn_z",
            "occupancy", "B_iso_or_equiv", "pdbx_formal_charge", "auth_seq_id", "auth_comp_id",
            "auth_asym_id", "auth_atom_id", "pdbx_PDB_model_num"]
    head = [f"data_{block}", "#", f"_entry.id {block}", "#", "loop_"] + [f"_atom_site.{c}" for c in cols]
    return "\n".join(head + rows + ["#"]) + "\n"


def uniprot_json(accession, pdb_ids, signal=None):
    doc = {"primaryAccession": accession, "entryType": "UniProtKB reviewed (Swiss-Prot)",
           "uniProtKBCrossReferences": [{"database": "PDB", "id": i,
                                         "properties": [{"key": "Method", "value": "X-ray"}]}
                                        for i in pdb_ids] + [{"database": "EMBL", "id": "X00001"}],
           "features": []}
    if signal:
        doc["features"].append({"type": "Signal", "location": {"start": {"value": signal[0], "modifier": "EXACT"},
                                                               "end": {"value": signal[1], "modifier": "EXACT"}},
                                "description": ""})
    doc["features"].append({"type": "Chain", "location": {"start": {"value": 1}, "end": {"value": 270}}})
    return json.dumps(doc, indent=1) + "\n"


def empiar_xml(entry, directories):
    sets = "".join(f"""  <imageSet>
    <name>Image set {k + 1}</name>
    <directory>/{d}</directory>
    <category>micrographs - multiframe</category>
    <headerFormat>T3</headerFormat>
    <dataFormat>EER</dataFormat>
    <numImagesOrTiltSeries>50</numImagesOrTiltSeries>
  </imageSet>
""" for k, d in enumerate(directories))
    return f"""<?xml version="1.0" encoding="UTF-8"?>
<empiar:entry xmlns:empiar="http://pdbe.org/empiar" accessionCode="EMPIAR-{entry}" public="true">
  <admin>
    <title>Fixture entry {entry}</title>
    <keywords>fixture</keywords>
  </admin>
  <crossReferences>
    <relatedEMDBEntries><emdbEntry>EMD-00000</emdbEntry></relatedEMDBEntries>
  </crossReferences>
{sets}</empiar:entry>
"""


def server_tree(expected):
    """Files served by the mock HTTP and FTP servers, laid out by URL path."""
    root = HERE / "server"
    if root.exists():
        shutil.rmtree(root)
    pdb = root / "pdb"
    af = root / "alphafold"
    up = root / "uniprot" / "uniprotkb"
    for d in (pdb, af, up):
        d.mkdir(parents=True)

    shutil.copy(HERE / "structures/4v1w.cif", pdb / "4V1W.cif")
    (pdb / "4V1W.pdb").write_text(small_pdb("4V1W", 3))
    (pdb / "7U6Q.cif").write_text(small_cif("7U6Q", 4))
    (pdb / "7U6Q.pdb").write_text(small_pdb("7U6Q", 4))
    shutil.copy(HERE / "structures/1q6u.pdb", pdb / "1Q6U.pdb")
    (pdb / "6NUA.cif").write_text(small_cif("6NUA", 5))
    for acc, n in (("F4HVG8", 6), ("A0A023FDY8", 7), ("P45523", 8)):
        (af / f"AF-{acc}-F1-model_v4.cif").write_text(small_cif(f"AF-{acc}-F1", n))
        (af / f"AF-{acc}-F1-model_v4.pdb").write_text(small_pdb("XXXX", n))
    (up / "P45523.json").write_text(uniprot_json("P45523", ["1Q6U", "1Q6H"], (1, 25)))
    (up / "A0A023FDY8.json").write_text(uniprot_json("A0A023FDY8", ["6NUA"]))
    (up / "F4HVG8.json").write_text(uniprot_json("F4HVG8", []))

    ea = root / "empiar" / "world_availability"
    gain_dir = "data/CL44-1_20201106_111915/Images-Disc1/GridSquare_6089277/Data"
    e1 = ea / "10934"
    (e1 / gain_dir).mkdir(parents=True)
    (e1 / "10934.xml").write_text(empiar_xml(10934, [gain_dir]))
    gain = []
    for k in range(3):
        name = f"FoilHole_609{k}150_Data_6089277_41_20201106_12004{k}_gain.tiff.bz2"
        payload = bz2.compress(b"II*\x00" + bytes((k * 31 + i) % 256 for i in range(4096)))
        (e1 / gain_dir / name).write_bytes(payload)
        gain.append(name)
    for k in range(2):
        (e1 / gain_dir / f"FoilHole_609{k}150_Data_6089277_41_20201106_12004{k}.xml").write_text(f"<frame>{k}</frame>\n")
    expected["gain_files"] = {n: hashlib.sha256((e1 / gain_dir / n).read_bytes()).hexdigest() for n in sorted(gain)}
    expected["gain_dir"] = gain_dir

    eer_dir = "data/MotionCorr/job003/Tiff/EER/Images-Disc1/GridSquare_11149061/Data"
    e2 = ea / "10943"
    (e2 / eer_dir).mkdir(parents=True)
    (e2 / "10943.xml").write_text(empiar_xml(10943, [eer_dir]))
    names = []
    for k in range(50):
        img = (np.arange(64, dtype=np.float32).reshape(1, 8, 8) + 100.0 * k)
        name = f"FoilHole_11160{k:03d}_Data_11150_{k % 7}_EER.mrc"
        (e2 / eer_dir / name).write_bytes(mrc_bytes(img, 2))
        names.append(name)
    names.sort()
    expected["eer_dir"] = eer_dir
    expected["eer_files"] = names
    # partition k holds arange + 100 * (index the file was generated with)
    expected["eer_offsets"] = [100.0 * int(n[14:17]) for n in names]


def glob_cases(expected):
    # fnmatch.fnmatchcase is the reference for wildcard matching.
    rng = random.Random(20201106)
    alphabet = "ab.-_[]!*?"
    names = ["", "a", "b", "ab", "a.b", "a-b", "[a]", "!a", "a*b", "a?b", "ba.", "aab-", "_", "b_a.b"]
    for _ in range(60):
        names.append("".join(rng.choice("ab.-_[]!") for _ in range(rng.randint(0, 6))))
    patterns = ["*", "?", "a*", "*b", "a?b", "[ab]", "[!a]*", "[a-b]*", "[b-a]", "[", "a[", "[]]",
                "[!]]", "*.b", "*[.-]*", "[a-]", "**", "*?*", "\\*"]
    for _ in range(60):
        patterns.append("".join(rng.choice(alphabet) for _ in range(rng.randint(1, 6))))
    cases = []
    for p in patterns:
        for n in names:
            cases.append([p, n, fnmatch.fnmatchcase(n, p)])
    expected["glob_cases"] = cases


def datasets(expected):
    root = HERE / "dataset"
    shutil.rmtree(root, ignore_errors=True)
    two = root / "two_classes"
    two.mkdir(parents=True)
    rng = np.random.default_rng(7)
    files = {}
    for label in ("1b23", "4v1w"):
        for k in range(1, 11):
            name = f"{label}_p{k:02d}_x.mrc"
            img = rng.normal(10.0 if label == "1b23" else -3.0, 2.0, size=(1, 12, 12)).astype("<f4")
            write(two / name, mrc_bytes(img, 2))
            files[name] = {"label": label, "suffix": f"p{k:02d}_x", "sum": float(img.astype(np.float64).sum())}
    (two / "noclassunderscore.mrc").write_bytes(mrc_bytes(np.zeros((1, 12, 12), "<f4"), 2))
    (two / "notes.txt").write_text("not an image\n")
    expected["two_classes"] = {"files": files, "classes": ["1b23", "4v1w"]}

    mixed = root / "mixed"
    mixed.mkdir()
    write(mixed / "a_flat.mrc", mrc_bytes(np.ones((1, 6, 6), "<f4"), 2))
    write(mixed / "a_volume.mrc", mrc_bytes(np.ones((3, 6, 6), "<f4"), 2))
    write(mixed / "b_corrupt.mrc", b"this is not an MRC file at all" * 40)


if __name__ == "__main__":
    main()
