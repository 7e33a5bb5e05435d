"""
CSV I/O - 原始流、特征表、预测结果与报告的 CSV 读写
浮点统一以 17 位有效数字写出，保证读回后逐位一致
"""

import re
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from models.features import AXES, FeatureTable
from models.gp_model import PredictionBatch
from models.reports import PredictionRecords
from models.stream import DEFAULT_SAMPLE_RATE, LABEL_COLUMNS, RawStream
from utils.errors import FormatError
from utils.logger import Logger

logger = Logger.get_logger("CsvIO")

FLOAT_FORMAT = "%.17g"
CHUNK_ROWS = 100_000

RAW_COLUMNS = ("t_s", "encoder_deg", "ax_g", "ay_g", "az_g", "rotation_id") + LABEL_COLUMNS
PREDICTION_COLUMNS = (
    ("rotation_id",)
    + LABEL_COLUMNS
    + ("mean_N", "variance_N2", "predictive_variance_N2", "lower_N", "upper_N")
)
FEATURE_COLUMN = re.compile(r"^f_(\d+)$")

PathLike = Union[str, Path]


def _write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        index=False,
        float_format=FLOAT_FORMAT,
        lineterminator="\n",
        encoding="utf-8",
        chunksize=CHUNK_ROWS,
    )
    return path


def _read_header(path: Path) -> List[str]:
    if not path.exists():
        raise FileNotFoundError(f"文件不存在: {path}")
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\r\n")
    if not header:
        raise FormatError("缺少表头", line=1)
    columns = [c.strip() for c in header.split(",")]
    seen = set()
    for name in columns:
        if name in seen:
            raise FormatError("重复的列", line=1, column=name)
        seen.add(name)
    return columns


def _check_columns(columns: Sequence[str], expected: Sequence[str]) -> None:
    """列集合必须与 expected 完全一致（顺序不限）"""
    for name in expected:
        if name not in columns:
            raise FormatError("缺少列", line=1, column=name)
    for name in columns:
        if name not in expected:
            raise FormatError("未知列", line=1, column=name)


def _check_numeric(
    frame: pd.DataFrame, columns: Sequence[str], int_columns: Sequence[str], offset: int
) -> pd.DataFrame:
    """校验一个分块，offset 为分块首行在文件中的数据行序号"""
    frame.columns = [str(c).strip() for c in frame.columns]
    for name in columns:
        values = frame[name]
        numeric = pd.to_numeric(values, errors="coerce")
        bad = ~np.isfinite(numeric.to_numpy(dtype=float))
        if np.any(bad):
            row = int(np.flatnonzero(bad)[0])
            raise FormatError(f"非有限数值 {values.iloc[row]!r}", line=offset + row + 2, column=name)
        if name in int_columns:
            as_float = frame[name].to_numpy(dtype=float)
            fractional = as_float != np.round(as_float)
            if np.any(fractional):
                row = int(np.flatnonzero(fractional)[0])
                raise FormatError("需要整数", line=offset + row + 2, column=name)
            frame[name] = frame[name].astype(np.int64)
    return frame[list(columns)]


def _read_numeric(path: Path, columns: Sequence[str], int_columns: Sequence[str] = ()) -> pd.DataFrame:
    """
    按 CHUNK_ROWS 分块读取数值 CSV，非数值或非有限值报告具体行列

    Args:
        path: 文件路径
        columns: 需要的列
        int_columns: 必须为整数的列

    Returns:
        只包含 columns 的 DataFrame（按 columns 排序）
    """
    frames = []
    offset = 0
    try:
        reader = pd.read_csv(
            path, float_precision="round_trip", skipinitialspace=True, chunksize=CHUNK_ROWS
        )
        with reader:
            for chunk in reader:
                frames.append(_check_numeric(chunk, columns, int_columns, offset))
                offset += len(chunk)
    except pd.errors.ParserError as e:
        raise FormatError(f"CSV 解析失败: {e}") from e

    if not frames:
        return pd.DataFrame(
            {name: np.empty(0, dtype=np.int64 if name in int_columns else float) for name in columns}
        )
    return pd.concat(frames, ignore_index=True)


def write_raw_csv(stream: RawStream, path: PathLike) -> Path:
    """
    写出原始流

    Args:
        stream: 原始流
        path: 输出路径

    Returns:
        写出的文件路径
    """
    frame = pd.DataFrame(
        {
            "t_s": stream.time,
            "encoder_deg": stream.encoder,
            "ax_g": stream.acc[:, 0],
            "ay_g": stream.acc[:, 1],
            "az_g": stream.acc[:, 2],
            "rotation_id": stream.rotation_id,
            **{name: stream.labels[:, i] for i, name in enumerate(LABEL_COLUMNS)},
        },
        columns=list(RAW_COLUMNS),
    )
    logger.info(f"写出原始流: {path} ({len(stream)} 个样本)")
    return _write_frame(frame, path)


def _infer_sample_rate(time: np.ndarray) -> float:
    if time.size < 2:
        return DEFAULT_SAMPLE_RATE
    # 写出时的时间戳为 k/fs，中位步长的倒数按 1e-6 Hz 取整
    return float(np.round(1.0 / np.median(np.diff(time)), 6))


def read_raw_csv(path: PathLike) -> RawStream:
    """
    读取原始流，列顺序可任意，采样率由时间列推断

    Args:
        path: 文件路径

    Returns:
        原始流（仅有表头时为空流）
    """
    path = Path(path)
    columns = _read_header(path)
    _check_columns(columns, RAW_COLUMNS)
    frame = _read_numeric(path, RAW_COLUMNS, int_columns=("rotation_id",))
    if frame.empty:
        return RawStream.empty()

    time = frame["t_s"].to_numpy(dtype=float)
    steps = np.diff(time)
    if np.any(steps <= 0):
        row = int(np.flatnonzero(steps <= 0)[0]) + 1
        raise FormatError("时间不是严格递增", line=row + 2, column="t_s")

    stream = RawStream(
        time=time,
        encoder=frame["encoder_deg"].to_numpy(dtype=float),
        acc=frame[["ax_g", "ay_g", "az_g"]].to_numpy(dtype=float),
        rotation_id=frame["rotation_id"].to_numpy(dtype=np.int64),
        labels=frame[list(LABEL_COLUMNS)].to_numpy(dtype=float),
        sample_rate=_infer_sample_rate(time),
    )
    logger.info(f"读取原始流: {path} ({len(stream)} 个样本, {stream.sample_rate:g} Hz)")
    return stream


def feature_columns(n_points: int) -> List[str]:
    """
    特征列名 f_0 ... f_{3n-1}

    轴优先排列: f_{a·n + j} 为轴 a（0=x, 1=y, 2=z）在相对角度 -half_span + step·j 处的加速度
    """
    return [f"f_{i}" for i in range(len(AXES) * n_points)]


def write_features_csv(table: FeatureTable, path: PathLike) -> Path:
    """
    写出特征表: rotation_id、标签列，再按轴优先顺序写出 3 × n_points 个特征

    Args:
        table: 特征表
        path: 输出路径

    Returns:
        写出的文件路径
    """
    names = feature_columns(table.n_points)
    frame = pd.DataFrame(table.design_matrix(AXES), columns=names)
    frame.insert(0, "rotation_id", table.rotation_ids)
    for i, name in enumerate(LABEL_COLUMNS):
        frame.insert(1 + i, name, table.labels[:, i])
    logger.info(f"写出特征表: {path} ({len(table)} 圈 × {len(names)} 列)")
    return _write_frame(frame, path)


def _parse_feature_header(names: Sequence[str]) -> int:
    """校验特征列为连续编号的 f_i，返回每轴测点数"""
    for i, name in enumerate(names):
        match = FEATURE_COLUMN.match(name)
        if match is None:
            raise FormatError("无法识别的特征列", line=1, column=name)
        if int(match.group(1)) != i:
            raise FormatError(f"特征列顺序错误，应为 f_{i}", line=1, column=name)

    if len(names) % len(AXES):
        raise FormatError(f"特征列数 {len(names)} 不是 {len(AXES)} 的倍数", line=1)
    n_points = len(names) // len(AXES)
    if n_points < 2:
        raise FormatError("每个轴至少需要 2 个测点", line=1)
    return n_points


def read_features_csv(path: PathLike, half_span: float = 35.0) -> FeatureTable:
    """
    读取特征表，网格步长由每轴测点数与半跨度推出

    Args:
        path: 文件路径
        half_span: 网格半跨度（度），与写出时的 patch.half_span_deg 一致

    Returns:
        特征表（仅有表头时为空表）
    """
    path = Path(path)
    columns = _read_header(path)
    meta = ("rotation_id",) + LABEL_COLUMNS
    for i, name in enumerate(meta):
        if i >= len(columns) or columns[i] != name:
            raise FormatError(f"第 {i + 1} 列应为 {name}", line=1)
    names = columns[len(meta):]
    n_points = _parse_feature_header(names)
    step = 2.0 * half_span / n_points

    frame = _read_numeric(path, columns, int_columns=("rotation_id",))
    if frame.empty:
        return FeatureTable.empty(n_points, step, half_span)
    values = frame[names].to_numpy(dtype=float)
    return FeatureTable(
        rotation_ids=frame["rotation_id"].to_numpy(dtype=np.int64),
        grids=values.reshape(len(frame), len(AXES), n_points).transpose(0, 2, 1),
        labels=frame[list(LABEL_COLUMNS)].to_numpy(dtype=float),
        step=step,
        half_span=half_span,
    )


def write_predictions_csv(records: PredictionRecords, path: PathLike) -> Path:
    """写出逐圈预测"""
    batch = records.predictions
    frame = pd.DataFrame(
        {
            "rotation_id": records.rotation_ids,
            **{name: records.labels[:, i] for i, name in enumerate(LABEL_COLUMNS)},
            "mean_N": batch.mean,
            "variance_N2": batch.variance,
            "predictive_variance_N2": batch.predictive_variance,
            "lower_N": batch.lower,
            "upper_N": batch.upper,
        },
        columns=list(PREDICTION_COLUMNS),
    )
    logger.info(f"写出预测: {path} ({len(records)} 圈)")
    return _write_frame(frame, path)


def read_predictions_csv(path: PathLike) -> PredictionRecords:
    """读取逐圈预测"""
    path = Path(path)
    _check_columns(_read_header(path), PREDICTION_COLUMNS)
    frame = _read_numeric(path, PREDICTION_COLUMNS, int_columns=("rotation_id",))
    variance = frame["variance_N2"].to_numpy(dtype=float)
    if np.any(variance < 0):
        row = int(np.flatnonzero(variance < 0)[0])
        raise FormatError("方差为负", line=row + 2, column="variance_N2")
    return PredictionRecords(
        rotation_ids=frame["rotation_id"].to_numpy(dtype=np.int64),
        labels=frame[list(LABEL_COLUMNS)].to_numpy(dtype=float).reshape(-1, 4),
        predictions=PredictionBatch(
            mean=frame["mean_N"].to_numpy(dtype=float),
            variance=variance,
            predictive_variance=frame["predictive_variance_N2"].to_numpy(dtype=float),
            lower=frame["lower_N"].to_numpy(dtype=float),
            upper=frame["upper_N"].to_numpy(dtype=float),
        ),
    )


def write_table(rows: Sequence[Dict], path: PathLike, columns: Sequence[str] = ()) -> Path:
    """
    写出报告表（每行一个配置或一个分箱）

    Args:
        rows: 行字典列表
        path: 输出路径
        columns: 列顺序，缺省取首行的键顺序

    Returns:
        写出的文件路径
    """
    columns = list(columns) or (list(rows[0].keys()) if rows else [])
    return _write_frame(pd.DataFrame(list(rows), columns=columns), path)
