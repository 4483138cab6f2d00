"""
Merge per-command CSV reports into a summary.

Writes summary.csv (metric,value), summary.kv (metric=value, one per line,
for CI assertions), plot_data.csv (feature,emd,mi sorted by EMD) and an
EMD/MI scatter image.
"""

import logging
from pathlib import Path
from typing import Dict, List, Tuple

import pandas as pd
from PIL import Image, ImageDraw

from ..utils.constants import REPORT_FLOAT_FORMAT
from ..utils.errors import InsufficientDataError
from .tables import POOLED, read_report, write_csv

logger = logging.getLogger(__name__)

REPORT_FILES = {
    "distortion": ("distortion.csv", ["feature", "emd", "mi", "n"]),
    "privacy": ("privacy.csv", ["group", "eer", "threshold", "n_genuine", "n_impostor"]),
    "utility": ("utility.csv", ["train_cond", "eval_cond", "fold", "seed", "f1"]),
    "wer": ("wer.csv", ["id", "wer", "n_ref_tokens"]),
}

PLOT_SIZE = (640, 480)
PLOT_MARGIN = 60


class ReportWriter:
    """Service for building the cross-command summary."""

    @classmethod
    def collect(cls, report_dir) -> Dict[str, pd.DataFrame]:
        report_dir = Path(report_dir)
        found = {}
        for name, (filename, required) in REPORT_FILES.items():
            path = report_dir / filename
            if path.is_file():
                found[name] = read_report(path, required)
        if not found:
            raise InsufficientDataError(f"no report CSVs found in {report_dir}")
        logger.info("Merging reports: %s", ", ".join(sorted(found)))
        return found

    @staticmethod
    def summary_metrics(reports: Dict[str, pd.DataFrame]) -> List[Tuple[str, float]]:
        metrics: List[Tuple[str, float]] = []
        if "distortion" in reports:
            for row in reports["distortion"].sort_values("feature").itertuples():
                metrics.append((f"distortion.{row.feature}.emd", float(row.emd)))
                metrics.append((f"distortion.{row.feature}.mi", float(row.mi)))
        if "privacy" in reports:
            for row in reports["privacy"].itertuples():
                metrics.append((f"privacy.{row.group}.eer", float(row.eer)))
        if "utility" in reports:
            utility = reports["utility"]
            means = utility[utility["fold"].astype(str) == "mean"]
            for row in means.itertuples():
                metrics.append((f"utility.{row.train_cond}->{row.eval_cond}.f1", float(row.f1)))
        if "wer" in reports:
            wer = reports["wer"]
            for row in wer[wer["id"].astype(str).str.startswith(POOLED)].itertuples():
                metrics.append((f"wer.{row.id}", float(row.wer)))
        return metrics

    @staticmethod
    def plot_data(distortion: pd.DataFrame) -> pd.DataFrame:
        """Feature vs (emd, mi), sorted by EMD descending, ties by feature name."""
        frame = distortion[["feature", "emd", "mi"]].copy()
        return frame.sort_values(["emd", "feature"], ascending=[False, True], kind="mergesort").reset_index(drop=True)

    @staticmethod
    def render_scatter(points: pd.DataFrame, path) -> Path:
        """Labelled EMD (x) vs MI (y) scatter; axes start at 0."""
        width, height = PLOT_SIZE
        image = Image.new("RGB", PLOT_SIZE, "white")
        draw = ImageDraw.Draw(image)
        x_max = max(float(points["emd"].max()), 1e-6) * 1.1
        y_max = max(float(points["mi"].max()), 1e-6) * 1.1
        left, bottom = PLOT_MARGIN, height - PLOT_MARGIN
        right, top = width - PLOT_MARGIN // 2, PLOT_MARGIN // 2

        draw.line([(left, top), (left, bottom), (right, bottom)], fill="black", width=1)
        draw.text((right - 30, bottom + 10), "EMD", fill="black")
        draw.text((5, top), "MI", fill="black")
        draw.text((left - 10, bottom + 5), "0", fill="black")
        draw.text((right - 60, bottom + 25), f"{x_max:.3f}", fill="gray")
        draw.text((5, top + 15), f"{y_max:.3f}", fill="gray")

        for row in points.itertuples():
            x = left + (right - left) * float(row.emd) / x_max
            y = bottom - (bottom - top) * float(row.mi) / y_max
            draw.ellipse([x - 4, y - 4, x + 4, y + 4], fill="steelblue", outline="black")
            draw.text((x + 6, y - 6), str(row.feature), fill="black")

        path = Path(path)
        image.save(path, format="PNG")
        return path

    @classmethod
    def write(cls, report_dir, out_dir) -> List[Path]:
        """Write the summary files; returns the paths written."""
        reports = cls.collect(report_dir)
        out_dir = Path(out_dir)
        metrics = cls.summary_metrics(reports)

        written = [write_csv(pd.DataFrame(metrics, columns=["metric", "value"]), out_dir / "summary.csv")]
        kv_path = out_dir / "summary.kv"
        with kv_path.open("w", encoding="utf-8", newline="\n") as handle:
            for key, value in metrics:
                handle.write(f"{key}={REPORT_FLOAT_FORMAT % value}\n")
        written.append(kv_path)

        if "distortion" in reports:
            points = cls.plot_data(reports["distortion"])
            written.append(write_csv(points, out_dir / "plot_data.csv"))
            written.append(cls.render_scatter(points, out_dir / "emd_mi.png"))
        return written
