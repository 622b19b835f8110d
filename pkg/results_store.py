#!/usr/bin/env python3
"""
Results Store - Persistent storage for simulation, optimization and appraisal outputs
Atomic JSON/CSV writes with backup of the previous file
"""

import json
import logging
import os
import shutil
import tempfile
from pathlib import Path
from typing import Any, Dict, List

import pandas as pd

from simulator import SimResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12g'


class ResultsStore:
    """
    Writes run outputs into one directory

    Features:
    - Temp-file-then-rename writes so readers never see partial files
    - Backup of an existing JSON file, restored if the write fails
    - Fixed column order and float format for reproducible CSVs
    """

    def __init__(self, output_dir):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.debug(f"📁 Results store initialized: {self.output_dir}")

    def _atomic_write(self, target: Path, write):
        fd, tmp_name = tempfile.mkstemp(dir=self.output_dir, prefix=f".{target.name}.", suffix=".tmp")
        os.close(fd)
        try:
            write(tmp_name)
            os.replace(tmp_name, target)
        finally:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        target = self.output_dir / name
        backup_path = self.output_dir / f"{name}.backup"
        try:
            if target.exists():
                shutil.copy2(target, backup_path)

            def write(tmp_name):
                with open(tmp_name, 'w', encoding='utf-8') as f:
                    json.dump(data, f, indent=2, sort_keys=True, ensure_ascii=False)
                    f.write("\n")

            self._atomic_write(target, write)
            if backup_path.exists():
                backup_path.unlink()
        except Exception as e:
            if backup_path.exists():
                shutil.move(backup_path, target)
            logger.error(f"❌ Error writing {target}: {e}")
            raise
        logger.info(f"💾 Wrote {target}")
        return target

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        target = self.output_dir / name
        self._atomic_write(target, lambda tmp: frame.to_csv(tmp, index=False, float_format=FLOAT_FORMAT))
        logger.info(f"💾 Wrote {target} ({len(frame)} rows)")
        return target

    def write_figure(self, name: str, fig, dpi: int = 120) -> Path:
        target = self.output_dir / name
        fmt = target.suffix.lstrip('.') or 'png'
        self._atomic_write(target, lambda tmp: fig.savefig(tmp, format=fmt, dpi=dpi))
        logger.info(f"📈 Wrote {target}")
        return target


def trace_frame(result: SimResult) -> pd.DataFrame:
    """One row per processed event"""
    return pd.DataFrame(
        [(r.event_id, r.packet_id, r.state, r.arc, r.fire_time) for r in result.trace],
        columns=['event_id', 'packet_id', 'state', 'arc', 'fire_time_h'],
    ).astype({'packet_id': 'Int64'})


def packets_frame(result: SimResult) -> pd.DataFrame:
    rows: List[tuple] = []
    for p in result.packets:
        rows.append((
            p.packet_id, p.path_id, p.od_id, p.departure_time, p.tau_estimate_at_departure,
            p.realized_travel_time, p.lambda_at_departure, p.revenue_contribution, p.completed, p.exogenous,
        ))
    return pd.DataFrame(rows, columns=[
        'packet_id', 'path_id', 'od_id', 'departure_time_h', 'tau_estimate_h',
        'realized_travel_time_h', 'lambda_eur_per_tkm_h', 'revenue_eur', 'completed', 'exogenous',
    ])


def od_tons_frame(result: SimResult) -> pd.DataFrame:
    return pd.DataFrame(
        [(od_id, t['rail'], t['road'], t['total']) for od_id, t in sorted(result.od_tons.items())],
        columns=['od_id', 'rail_tons', 'road_tons', 'total_tons'],
    )


def throughput_frame(result: SimResult, period_h: float = 24.0) -> pd.DataFrame:
    rows = [
        (arc_id, period, count)
        for arc_id, counts in result.arc_throughput(period_h).items()
        for period, count in counts.items()
    ]
    return pd.DataFrame(rows, columns=['arc_id', 'period', 'entries_trains'])


def optimization_log_frame(log) -> pd.DataFrame:
    """(stage, evaluation index, vector, Z) for convergence plots"""
    rows = [(stage, i, json.dumps(list(r.vector)), r.Z) for i, (stage, r) in enumerate(log)]
    return pd.DataFrame(rows, columns=['stage', 'evaluation', 'vector', 'Z_eur'])


def history_frame(history) -> pd.DataFrame:
    return pd.DataFrame(list(history), columns=['iteration', 'mesh', 'best_Z_eur'])
