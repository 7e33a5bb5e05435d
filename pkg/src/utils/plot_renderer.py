"""
Plot Renderer - 预测值随转圈变化的静态 SVG（折线 + 区间带）
"""

from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from models.reports import PredictionRecords
from utils.errors import InvalidInputError
from utils.logger import Logger

logger = Logger.get_logger("PlotRenderer")

try:
    import pymupdf as fitz  # PyMuPDF 新版本导入方式
except ImportError:
    try:
        import fitz  # PyMuPDF 旧版本导入方式
    except ImportError:
        fitz = None  # PyMuPDF 未安装

PAGE_SIZE = (800.0, 400.0)
MARGIN = 40.0

BAND_COLOR = (0.78, 0.86, 1.0)
MEAN_COLOR = (0.0, 0.25, 0.8)
TRUTH_COLOR = (0.1, 0.1, 0.1)
AXIS_COLOR = (0.5, 0.5, 0.5)


def _scale(values: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float) -> np.ndarray:
    span = hi - lo if hi > lo else 1.0
    return out_lo + (values - lo) / span * (out_hi - out_lo)


def render_prediction_svg(
    records: PredictionRecords,
    path: Union[str, Path],
    title: str = "Fy prediction",
    size: Tuple[float, float] = PAGE_SIZE,
) -> Optional[Path]:
    """
    绘制预测均值、95% 区间带与真值

    Args:
        records: 逐圈预测
        path: SVG 输出路径
        title: 图标题
        size: 页面尺寸（pt）

    Returns:
        写出的路径；未安装 PyMuPDF 时返回 None
    """
    if fitz is None:
        logger.warning("PyMuPDF 未安装，跳过 SVG 输出")
        return None
    if len(records) == 0:
        raise InvalidInputError("没有可绘制的预测")

    width, height = size
    batch = records.predictions
    index = np.arange(len(records), dtype=float)
    lo = float(min(batch.lower.min(), records.truth.min()))
    hi = float(max(batch.upper.max(), records.truth.max()))

    xs = _scale(index, 0.0, max(index[-1], 1.0), MARGIN, width - MARGIN)

    def to_y(values: np.ndarray) -> np.ndarray:
        # 页面坐标 y 轴向下
        return _scale(values, lo, hi, height - MARGIN, MARGIN)

    def points(ys: np.ndarray) -> list:
        return [fitz.Point(float(x), float(y)) for x, y in zip(xs, ys)]

    doc = fitz.open()
    try:
        page = doc.new_page(width=width, height=height)
        shape = page.new_shape()

        band = points(to_y(batch.upper)) + points(to_y(batch.lower))[::-1]
        shape.draw_polyline(band)
        shape.finish(color=None, fill=BAND_COLOR, closePath=True)

        shape.draw_polyline(points(to_y(records.truth)))
        shape.finish(color=TRUTH_COLOR, width=0.6, closePath=False)

        shape.draw_polyline(points(to_y(batch.mean)))
        shape.finish(color=MEAN_COLOR, width=0.8, closePath=False)

        shape.draw_rect(fitz.Rect(MARGIN, MARGIN, width - MARGIN, height - MARGIN))
        shape.finish(color=AXIS_COLOR, width=0.5)
        shape.commit()

        page.insert_text(fitz.Point(MARGIN, MARGIN - 12), title, fontsize=11)
        page.insert_text(fitz.Point(4, MARGIN + 4), f"{hi:.0f} N", fontsize=7)
        page.insert_text(fitz.Point(4, height - MARGIN), f"{lo:.0f} N", fontsize=7)
        page.insert_text(
            fitz.Point(width - MARGIN - 60, height - MARGIN + 14),
            f"rotation 0-{len(records) - 1}",
            fontsize=7,
        )
        svg = page.get_svg_image()
    finally:
        doc.close()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    logger.info(f"SVG 已写出: {path}")
    return path
