"""Thin adapter: evaluate a checkpoint, emit scalelens manifest/record files."""

__version__ = "0.1.0"

from .export import (ExportError, ExportJob, count_trainable_params,
                     evaluate, export_run, load_checkpoint, load_dataset)
