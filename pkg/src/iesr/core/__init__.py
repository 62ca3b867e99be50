from .dataset import (
    DatabaseRegistry,
    DatasetError,
    DbHandle,
    LoadedDataset,
    dump_dataset,
    introspect_schema,
    load_dataset,
)
from .normalize import ComparePolicy, NormalizedValue, normalize_cell
from .types import ColumnDef, DatabaseSchema, EvalCase, ForeignKey, Question, TableDef

__all__ = [
    "ColumnDef",
    "ComparePolicy",
    "DatabaseRegistry",
    "DatabaseSchema",
    "DatasetError",
    "DbHandle",
    "EvalCase",
    "ForeignKey",
    "LoadedDataset",
    "NormalizedValue",
    "Question",
    "TableDef",
    "dump_dataset",
    "introspect_schema",
    "load_dataset",
    "normalize_cell",
]
