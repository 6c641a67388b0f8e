"""Self-describing binary output and bit-exact checkpointing.

Container layout ("TPST" files): a 4-byte magic, one version byte, a
little-endian u64 header length, a canonical JSON header, then the raw
payload. The header lists every dataset with its grid box and its byte
range inside the payload, so a reader can fetch one variable or one
subregion without touching the rest of the file. Values are float64,
x varying fastest.

Checkpoints are directories: a checkpoint.json manifest (parameters,
times, chunk index) plus one or more chunk files, partitioned by the
configured output strategy. Restores may use a different rank count than
the writer; readers open only the chunks whose boxes they need.
"""

from __future__ import annotations

import json
import os
import struct
import time as _time

import numpy as np

from .region import Box

MAGIC = b"TPST"
VERSION = 1


class FormatError(Exception):
    pass


def _canonical(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode()


def write_container(path, datasets):
    """datasets: list of dicts with keys name, tl, level, rank, box (Box),
    ghost_width, iteration, time, attributes, data (3D array over box)."""
    entries = []
    blobs = []
    offset = 0
    for ds in datasets:
        blob = np.ascontiguousarray(ds["data"], dtype=np.float64).tobytes(order="F")
        entries.append({
            "name": ds["name"],
            "tl": ds["tl"],
            "level": ds["level"],
            "rank": ds["rank"],
            "box": [list(ds["box"].lo), list(ds["box"].hi)],
            "ghost_width": ds["ghost_width"],
            "iteration": ds["iteration"],
            "time": ds["time"],
            "attributes": ds.get("attributes", {}),
            "offset": offset,
            "length": len(blob),
        })
        blobs.append(blob)
        offset += len(blob)
    header = _canonical({"datasets": entries, "payload_bytes": offset})
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(bytes([VERSION]))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        for blob in blobs:
            f.write(blob)


def read_container(path):
    """Returns (entries, payload_reader) where payload_reader(entry) gives
    the dataset as a 3D array over its box."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise FormatError(f"{path}: not a TPST container (bad magic)")
    if raw[4] != VERSION:
        raise FormatError(f"{path}: unsupported version {raw[4]}")
    (hlen,) = struct.unpack_from("<Q", raw, 5)
    hstart = 13
    pstart = hstart + hlen
    if pstart > len(raw):
        raise FormatError(f"{path}: truncated header")
    header = json.loads(raw[hstart:pstart].decode())
    if pstart + header["payload_bytes"] != len(raw):
        raise FormatError(f"{path}: payload size mismatch (corrupt chunk)")
    entries = header["datasets"]

    def reader(entry):
        box = Box(tuple(entry["box"][0]), tuple(entry["box"][1]))
        a = entry["offset"] + pstart
        b = a + entry["length"]
        if entry["length"] != 8 * box.volume or b > len(raw):
            raise FormatError(
                f"{path}: dataset {entry['name']} has inconsistent extent")
        flat = np.frombuffer(raw[a:b], dtype=np.float64)
        return flat.reshape(box.extent, order="F")

    return entries, reader


def _dataset_sort_key(entry):
    return (entry["rank"], entry["name"], entry["tl"], entry["level"],
            tuple(entry["box"][0]) if isinstance(entry["box"], list)
            else tuple(entry["box"].lo))


def _partition_ranks(sim):
    """rank -> chunk index under the configured strategy."""
    strategy = sim.flesh.get("io::strategy")
    nranks = sim.flesh.get("driver::nranks")
    if strategy == "single-collector":
        return {r: 0 for r in range(nranks)}
    if strategy == "every-nth":
        n = sim.flesh.get("io::every_nth")
        return {r: r // n for r in range(nranks)}
    return {r: r for r in range(nranks)}


def _block_datasets(sim, blocks, group_vars, all_tls):
    out = []
    for b in blocks:
        level = getattr(b, "level", 0)
        for group, var, public in group_vars:
            tls = len(b.data[group]) if all_tls else 1
            for tl in range(tls):
                out.append({
                    "name": public,
                    "group": group,
                    "var": var,
                    "tl": tl,
                    "level": level,
                    "rank": b.rank,
                    "box": b.box,
                    "ghost_width": b.gw,
                    "iteration": sim.iteration,
                    "time": sim.t,
                    "attributes": {},
                    "data": b.var(group, var, tl)[b.owned],
                })
    return out


def _write_chunks(sim, dirpath, base, datasets):
    """Partition datasets into chunk files by rank; returns the chunk index."""
    part = _partition_ranks(sim)
    chunks: dict[int, list] = {}
    for ds in datasets:
        chunks.setdefault(part[ds["rank"]], []).append(ds)
    index = []
    for ci in sorted(chunks):
        dss = sorted(chunks[ci], key=_dataset_sort_key)
        fname = f"{base}_chunk{ci}.tpst"
        write_container(os.path.join(dirpath, fname), dss)
        index.append({
            "file": fname,
            "ranks": sorted({ds["rank"] for ds in dss}),
            "boxes": sorted({(ds["level"], ds["box"].lo, ds["box"].hi)
                             for ds in dss}),
        })
    for entry in index:
        entry["boxes"] = [[lv, list(lo), list(hi)] for lv, lo, hi in entry["boxes"]]
    return index


def write_vars(sim):
    """Write the io::out_vars selection (tl 0, every level) for this
    iteration; returns the list of files written."""
    names = sim.flesh.get("io::out_vars").replace(",", " ").split()
    if not names:
        return []
    group_vars = []
    for name in names:
        group, var = sim.resolve_variable(name)
        group_vars.append((group, var, name))
    dirpath = sim.flesh.get("io::out_dir")
    os.makedirs(dirpath, exist_ok=True)
    base = f"it{sim.iteration:08d}"
    datasets = _block_datasets(sim, sim.driver.blocks, group_vars, all_tls=False)
    index = _write_chunks(sim, dirpath, base, datasets)
    return [os.path.join(dirpath, e["file"]) for e in index]


def _format_param(spec, value):
    if spec.kind == "bool":
        return "true" if value else "false"
    return str(value)


def checkpoint_write(sim):
    """Write a complete state snapshot; returns the checkpoint directory."""
    dirpath = os.path.join(sim.flesh.get("io::out_dir"),
                           f"checkpoint_it{sim.iteration:08d}")
    os.makedirs(dirpath, exist_ok=True)
    group_vars = []
    for group in sim.flesh.groups.values():
        for v in group.variables:
            group_vars.append((group.full_name, v, f"{group.full_name}/{v}"))
    group_vars.sort()
    datasets = _block_datasets(sim, sim.driver.blocks, group_vars, all_tls=True)
    index = _write_chunks(sim, dirpath, "state", datasets)
    params = {name: _format_param(spec, sim.flesh.get(name))
              for name, spec in sorted(sim.flesh.params.items())}
    manifest = {
        "format": "tapestry-checkpoint",
        "version": VERSION,
        "written": _time.strftime("%Y-%m-%dT%H:%M:%S"),
        "iteration": sim.iteration,
        "time": sim.t,
        "dt": sim.dt,
        "nranks": sim.flesh.get("driver::nranks"),
        "strategy": sim.flesh.get("io::strategy"),
        "parameters": params,
        "driver": sim.driver.description(),
        "chunks": index,
    }
    with open(os.path.join(dirpath, "checkpoint.json"), "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    return dirpath


def read_manifest(dirpath):
    with open(os.path.join(dirpath, "checkpoint.json")) as f:
        manifest = json.load(f)
    if manifest.get("format") != "tapestry-checkpoint":
        raise FormatError(f"{dirpath}: not a checkpoint directory")
    return manifest


def checkpoint_load(sim, dirpath, manifest=None):
    """Fill a freshly built simulator's storage from a checkpoint; only
    chunks whose boxes intersect the reader's blocks are opened. Returns
    the list of chunk files actually read."""
    if manifest is None:
        manifest = read_manifest(dirpath)
    sim.iteration = manifest["iteration"]
    sim.t = manifest["time"]
    sim.dt = manifest["dt"]
    levels = getattr(sim.driver, "levels", None)
    if levels is not None:
        for lv, desc in zip(levels, manifest["driver"]["levels"]):
            lv.times = list(desc.get("times", []))
            lv.steps = desc.get("steps", 0)
    by_level: dict[int, list] = {}
    for b in sim.driver.blocks:
        by_level.setdefault(getattr(b, "level", 0), []).append(b)
    opened = []
    for chunk in manifest["chunks"]:
        needed = False
        for lvi, lo, hi in chunk["boxes"]:
            cb = Box(tuple(lo), tuple(hi))
            if any(bl.box.overlaps(cb) for bl in by_level.get(lvi, ())):
                needed = True
                break
        if not needed:
            continue
        path = os.path.join(dirpath, chunk["file"])
        opened.append(chunk["file"])
        entries, reader = read_container(path)
        for entry in entries:
            group, var = entry["name"].split("/", 1)
            box = Box(tuple(entry["box"][0]), tuple(entry["box"][1]))
            data = None
            for bl in by_level.get(entry["level"], ()):
                if entry["tl"] >= len(bl.data.get(group, ())):
                    continue
                ov = bl.box.intersect(box)
                if ov.empty:
                    continue
                if data is None:
                    data = reader(entry)
                bl.var(group, var, entry["tl"])[bl.local(ov)] = \
                    data[ov.slicer(box.lo)]
    sim.events.append(f"{sim.iteration} restore {dirpath} "
                      f"read {len(opened)}/{len(manifest['chunks'])} chunks")
    return opened


def read_dataset(dirpath, name, box: Box, level=0, tl=0):
    """Assemble `name` over `box` from a checkpoint, opening only the
    chunks that intersect it. Returns (array, opened_files)."""
    manifest = read_manifest(dirpath)
    out = np.full(box.extent, np.nan)
    opened = []
    for chunk in manifest["chunks"]:
        if not any(lvi == level and Box(tuple(lo), tuple(hi)).overlaps(box)
                   for lvi, lo, hi in chunk["boxes"]):
            continue
        path = os.path.join(dirpath, chunk["file"])
        opened.append(chunk["file"])
        entries, reader = read_container(path)
        for entry in entries:
            if (entry["name"] != name or entry["level"] != level
                    or entry["tl"] != tl):
                continue
            ebox = Box(tuple(entry["box"][0]), tuple(entry["box"][1]))
            ov = ebox.intersect(box)
            if ov.empty:
                continue
            out[ov.slicer(box.lo)] = reader(entry)[ov.slicer(ebox.lo)]
    return out, opened
