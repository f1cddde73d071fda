# Bulk importer: raw finger-movement EMG recordings -> canonical PFC CSV.
#
# Input: a directory of per-movement, per-trial CSV files named like
# `<label>_<trial>.csv` (also `HC-3.csv` style names via --label-map), each
# holding two EMG channels. Output: one `ch1,ch2,label,trial` CSV that
# esnchip's PFC loader reads.
import argparse
import logging
import re
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from esnchip.config import DATA_ROOT
from esnchip.harness.datasets import PFC_COLUMNS

# --- Setup ---
logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - IMPORTER - %(message)s")

NAME_PATTERN = re.compile(r"^(?P<movement>[A-Za-z0-9]+?)[_\-](?P<trial>\d+)$")
DEFAULT_OUTPUT = "pfc.csv"


def parse_name(stem: str, label_map: Optional[Dict[str, int]] = None) -> Optional[Tuple[int, int]]:
    """(label, trial) from a file stem, or None when the name does not follow the pattern."""
    match = NAME_PATTERN.match(stem)
    if not match:
        return None
    movement, trial = match.group("movement"), int(match.group("trial"))
    if label_map is not None:
        if movement.lower() not in label_map:
            return None
        return label_map[movement.lower()], trial
    if not movement.isdigit():
        return None
    return int(movement), trial


def read_emg_file(path: Path) -> pd.DataFrame:
    """Two EMG channels, with or without a header; extra columns are ignored."""
    frame = pd.read_csv(path, header=None, dtype=str)
    first = frame.iloc[0].tolist() if len(frame) else []
    if first and pd.to_numeric(pd.Series(first), errors="coerce").isna().any():
        # header row: prefer columns that look like channels
        header = [str(c).lower().strip() for c in first]
        frame = frame.iloc[1:].reset_index(drop=True)
        frame.columns = header
        channel_cols = [c for c in header if "ch" in c or "emg" in c] or header
    else:
        channel_cols = list(frame.columns)
    if len(channel_cols) < 2:
        raise ValueError(f"{path}: expected two EMG channels, found {len(channel_cols)} column(s)")
    data = frame[channel_cols[:2]].apply(pd.to_numeric, errors="coerce")
    bad = data.isna().any(axis=1)
    if bad.any():
        raise ValueError(f"{path}: non-numeric sample on data row {int(bad.to_numpy().argmax()) + 1}")
    data.columns = ["ch1", "ch2"]
    return data


def build_canonical(input_dir: Path, label_map: Optional[Dict[str, int]] = None) -> pd.DataFrame:
    frames: List[pd.DataFrame] = []
    skipped = 0
    for path in sorted(Path(input_dir).glob("*.csv")):
        parsed = parse_name(path.stem, label_map)
        if parsed is None:
            logging.warning(f"Skipping {path.name}: name is not <movement>_<trial>")
            skipped += 1
            continue
        label, trial = parsed
        try:
            data = read_emg_file(path)
        except (ValueError, pd.errors.EmptyDataError) as e:
            logging.error(f"Error reading {path.name}: {e}. Skipping file.")
            skipped += 1
            continue
        frames.append(data.assign(label=label, trial=trial))
        logging.info(f"Read {len(data)} samples from {path.name} (label {label}, trial {trial})")

    if not frames:
        logging.warning("No valid recordings found.")
        return pd.DataFrame(columns=PFC_COLUMNS)
    out = pd.concat(frames, ignore_index=True)[PFC_COLUMNS]
    # stable order: trial, then label, samples in file order
    out = out.sort_values(["trial", "label"], kind="stable").reset_index(drop=True)
    logging.info(f"Collected {len(out)} samples from {len(frames)} file(s); {skipped} skipped")
    return out


def _parse_label_map(text: Optional[str]) -> Optional[Dict[str, int]]:
    if not text:
        return None
    mapping = {}
    for item in text.split(","):
        name, _, label = item.partition("=")
        mapping[name.strip().lower()] = int(label)
    return mapping


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Convert raw EMG recordings into the canonical PFC CSV.")
    parser.add_argument("input_dir", help="directory of <movement>_<trial>.csv files")
    parser.add_argument("--output", default=str(DATA_ROOT / DEFAULT_OUTPUT))
    parser.add_argument("--label-map", help="movement names to labels, e.g. HC=1,I=2,M=3,R=4")
    args = parser.parse_args(argv)

    input_dir = Path(args.input_dir)
    if not input_dir.is_dir():
        logging.critical(f"ERROR: The directory '{input_dir}' was not found.")
        return 1
    frame = build_canonical(input_dir, _parse_label_map(args.label_map))
    if frame.empty:
        return 1
    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output, index=False, lineterminator="\n")
    logging.info(f"Success! Wrote {len(frame)} samples to {output}.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
