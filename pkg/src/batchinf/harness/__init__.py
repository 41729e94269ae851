"""Replication engine, summaries and command line."""

from .config import RunConfig, build_config, load_config, parse_config_text
from .replicate import Record, check_failures, read_records, records_to_csv, replicate, run_rep, winner_sequence, write_outputs
from .summary import BinRow, SummaryRow, conditional_bins, summarize, summary_to_csv, wilson_interval

__all__ = [
    "BinRow", "Record", "RunConfig", "SummaryRow", "build_config", "check_failures", "conditional_bins",
    "load_config", "parse_config_text", "read_records", "records_to_csv", "replicate", "run_rep",
    "summarize", "summary_to_csv", "wilson_interval", "winner_sequence", "write_outputs",
]
