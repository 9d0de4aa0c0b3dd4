# backend/app/db/dataset_file.py
"""
UPDE dataset container, version 1.

Header: magic, version, family, grid, storage dtype, coefficient names,
condition groups, retry count, field schema, sample count. Then one record per
sample: symbols, coefficients, boundary, presence flags and point-wise fields,
input, output and split tag. All numbers little-endian.
"""
import logging
from pathlib import Path
from typing import List, Tuple

from app.core.exceptions import FormatError, NotFoundException
from app.db.codec import DTYPE_CODES, BinaryReader, BinaryWriter
from app.schemas.dataset import Dataset, DatasetHeader
from app.schemas.pde_components import (
    BOUNDARY_KINDS,
    SIDES,
    BoundarySpec,
    Family,
    GridSpec,
    PDEComponents,
    RobinParams,
    Sample,
    SplitTag,
)
from app.schemas.task_spec import ConditionGroup
from app.services.component_service import component_service

logger = logging.getLogger(__name__)

MAGIC = b"UPDE"
VERSION = 1
KIND = "dataset file"

POINT_FIELDS = ("force", "kappa", "geometry_mask", "boundary_values")
SPLITS = (SplitTag.ID, SplitTag.OOD)


def _write_grid(w: BinaryWriter, grid: GridSpec) -> None:
    w.u8(grid.dims)
    w.u32(grid.n_x)
    w.u32(grid.n_y or 0)
    w.u32(grid.n_t)
    for lo, hi in (grid.x_range, grid.y_range, grid.t_range):
        w.f64(lo)
        w.f64(hi)
    w.u8(int(grid.periodic))


def _read_grid(r: BinaryReader) -> GridSpec:
    dims, n_x, n_y, n_t = r.u8(), r.u32(), r.u32(), r.u32()
    ranges = [(r.f64(), r.f64()) for _ in range(3)]
    return GridSpec(dims=dims, n_x=n_x, n_y=n_y or None, n_t=n_t, x_range=ranges[0], y_range=ranges[1],
                    t_range=ranges[2], periodic=bool(r.u8()))


def field_schema(dataset: Dataset) -> List[Tuple[str, int]]:
    """Field names with their channel counts; point-wise fields only when some sample carries them."""
    if not dataset.samples:
        return []
    first = dataset.samples[0]
    channels = 1 if dataset.header.grid.dims == 1 else None
    schema = [
        ("input", channels or first.input.shape[0]),
        ("output", channels or first.output.shape[0]),
    ]
    for name in POINT_FIELDS:
        if any(s.components.point_fields()[name] is not None for s in dataset.samples):
            schema.append((name, 1))
    return schema


def _write_sample(w: BinaryWriter, sample: Sample, dtype: str) -> None:
    comp = sample.components
    w.string(comp.symbols)
    w.u16(len(comp.coefficients))
    for name, value in comp.coefficients.items():
        w.string(name)
        w.f64(value)
    w.u8(len(comp.boundary.sides))
    for side, kind in comp.boundary.sides.items():
        w.u8(SIDES.index(side))
        w.u8(BOUNDARY_KINDS.index(kind))
        robin = comp.boundary.robin.get(side)
        w.u8(robin is not None)
        if robin is not None:
            for value in (robin.alpha, robin.beta, robin.gamma):
                w.f64(value)
    fields = comp.point_fields()
    w.u8(sum(1 << i for i, name in enumerate(POINT_FIELDS) if fields[name] is not None))
    for name in POINT_FIELDS:
        if fields[name] is not None:
            w.array(fields[name], dtype)
    w.array(sample.input, dtype)
    w.array(sample.output, dtype)
    w.u8(SPLITS.index(sample.split))


def _read_sample(r: BinaryReader, family: Family) -> Sample:
    symbols = r.string()
    coefficients = {}
    for _ in range(r.u16()):
        name = r.string()
        coefficients[name] = r.f64()
    sides, robin = {}, {}
    for _ in range(r.u8()):
        side_idx, kind_idx, has_robin = r.u8(), r.u8(), r.u8()
        if side_idx >= len(SIDES) or kind_idx >= len(BOUNDARY_KINDS):
            raise FormatError(f"{KIND} holds an unknown boundary code ({side_idx}, {kind_idx})")
        side = SIDES[side_idx]
        sides[side] = BOUNDARY_KINDS[kind_idx]
        if has_robin:
            robin[side] = RobinParams(alpha=r.f64(), beta=r.f64(), gamma=r.f64())
    flags = r.u8()
    fields = {name: r.array()[0] if flags & (1 << i) else None for i, name in enumerate(POINT_FIELDS)}
    components = PDEComponents(symbols=symbols, coefficients=coefficients,
                               boundary=BoundarySpec(sides=sides, robin=robin), **fields)
    inputs, _ = r.array()
    output, _ = r.array()
    split_idx = r.u8()
    if split_idx >= len(SPLITS):
        raise FormatError(f"{KIND} holds an unknown split code {split_idx}")
    return Sample(input=inputs, output=output, components=components, split=SPLITS[split_idx], family=family)


def encode_dataset(dataset: Dataset) -> bytes:
    header = dataset.header
    w = BinaryWriter()
    w.header(MAGIC, VERSION)
    w.string(header.family.value)
    _write_grid(w, header.grid)
    w.u8(DTYPE_CODES[header.storage_dtype])
    w.u16(len(header.coefficient_names))
    for name in header.coefficient_names:
        w.string(name)
    w.u16(len(header.condition_groups))
    for group in header.condition_groups:
        w.u8(SPLITS.index(group.split))
        w.u16(len(group.values))
        for name, value in group.values.items():
            w.string(name)
            w.f64(value)
    w.u32(header.retries)
    schema = field_schema(dataset)
    w.u8(len(schema))
    for name, channels in schema:
        w.string(name)
        w.u16(channels)
    w.u32(len(dataset.samples))
    for sample in dataset.samples:
        _write_sample(w, sample, header.storage_dtype)
    return w.getvalue()


def decode_dataset(data: bytes) -> Dataset:
    r = BinaryReader(data, KIND)
    r.header(MAGIC, VERSION)
    try:
        family = Family(r.string())
    except ValueError as exc:
        raise FormatError(f"{KIND} names an unknown family") from exc
    grid = _read_grid(r)
    dtype_code = r.u8()
    storage = next((k for k, v in DTYPE_CODES.items() if v == dtype_code), None)
    if storage is None:
        raise FormatError(f"{KIND} uses unknown dtype code {dtype_code}")
    names = tuple(r.string() for _ in range(r.u16()))
    groups = []
    for _ in range(r.u16()):
        split_idx = r.u8()
        if split_idx >= len(SPLITS):
            raise FormatError(f"{KIND} holds an unknown split code {split_idx}")
        split = SPLITS[split_idx]
        values = {}
        for _ in range(r.u16()):
            key = r.string()
            values[key] = r.f64()
        groups.append(ConditionGroup(values=values, split=split))
    retries = r.u32()
    for _ in range(r.u8()):
        r.string()
        r.u16()
    count = r.u32()
    samples = [_read_sample(r, family) for _ in range(count)]
    r.expect_end()
    header = DatasetHeader(family=family, grid=grid, coefficient_names=names, condition_groups=groups,
                           retries=retries, storage_dtype=storage)
    return Dataset(header=header, samples=samples)


def save_dataset(path: Path, dataset: Dataset) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_dataset(dataset))
    logger.info(f"Wrote {len(dataset)} samples to {path}")
    return path


def load_dataset(path: Path, validate: bool = True) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise NotFoundException(f"dataset file {path} not found")
    dataset = decode_dataset(path.read_bytes())
    if validate:
        for index, sample in enumerate(dataset.samples):
            violations = component_service.validate(sample, dataset.header.grid)
            if violations:
                raise FormatError(f"sample {index} of {path} fails validation: {violations}")
    return dataset
