"""
Model Store - 训练模型的版本化单文件存储

文件布局:
    8 字节魔数 | u32 版本 | u32 头部长度 | JSON 头部 | 依次排列的 .npy 数组块

加载时重新计算 Gram 矩阵与 Cholesky 分解，并校验超参数摘要
"""

import hashlib
import io
import json
import struct
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from controllers.regressor import condition
from models.gp_model import FeatureConfig, Hyperparameters, Standardizer, TrainedModel
from utils.errors import FormatError, UnsupportedVersionError
from utils.logger import Logger

logger = Logger.get_logger("ModelStore")

MAGIC = b"TIREGPR\x00"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")

ARRAY_NAMES = ("X", "y", "alpha", "input_mean", "input_std", "active")
ALPHA_TOLERANCE = 1e-8


def _hyper_record(hyper: Hyperparameters) -> Dict:
    return {
        "signal_variance": float(hyper.signal_variance),
        "length_scales": [float(v) for v in hyper.length_scales],
        "noise_variance": float(hyper.noise_variance),
    }


def _digest(record: Dict) -> str:
    payload = json.dumps(record, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _npy_bytes(array: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    np.save(buffer, np.ascontiguousarray(array), allow_pickle=False)
    return buffer.getvalue()


def save_model(model: TrainedModel, path: Union[str, Path]) -> Path:
    """
    保存模型，相同模型总是写出逐字节相同的文件

    Args:
        model: 训练好的模型
        path: 输出路径

    Returns:
        写出的文件路径
    """
    path = Path(path)
    scaler = model.standardizer
    arrays = {
        "X": model.X,
        "y": model.y,
        "alpha": model.alpha,
        "input_mean": scaler.input_mean,
        "input_std": scaler.input_std,
        "active": scaler.active.astype(bool),
    }
    blobs = [_npy_bytes(arrays[name]) for name in ARRAY_NAMES]

    offsets, cursor = {}, 0
    for name, blob in zip(ARRAY_NAMES, blobs):
        offsets[name] = [cursor, len(blob)]
        cursor += len(blob)

    hyper = _hyper_record(model.hyper)
    header = {
        "feature_config": model.feature_config.as_dict(),
        "hyperparameters": hyper,
        "hyperparameters_sha256": _digest(hyper),
        "target_mean": float(scaler.target_mean),
        "target_std": float(scaler.target_std),
        "log_likelihood": float(model.log_likelihood),
        "jitter": float(model.jitter),
        "arrays": offsets,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)
    logger.info(f"模型已保存: {path} (n={model.n_train}, d={model.X.shape[1]})")
    return path


def _read_container(data: bytes) -> Tuple[Dict, Dict[str, np.ndarray]]:
    if len(data) < _PREFIX.size:
        raise FormatError("文件过短，不是模型文件")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"魔数错误: {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"不支持的模型版本 {version}（当前 {FORMAT_VERSION}）")

    body_start = _PREFIX.size + header_len
    try:
        header = json.loads(data[_PREFIX.size:body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"模型头部损坏: {e}") from e

    arrays = {}
    try:
        for name in ARRAY_NAMES:
            offset, size = header["arrays"][name]
            chunk = data[body_start + offset : body_start + offset + size]
            arrays[name] = np.load(io.BytesIO(chunk), allow_pickle=False)
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(f"模型数组损坏: {e}") from e
    return header, arrays


def load_model(path: Union[str, Path]) -> TrainedModel:
    """
    读取模型并重建分解

    Args:
        path: 模型文件路径

    Returns:
        与保存时预测一致的模型
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"模型文件不存在: {path}")
    header, arrays = _read_container(path.read_bytes())

    try:
        record = header["hyperparameters"]
        if _digest(record) != header["hyperparameters_sha256"]:
            raise FormatError("超参数摘要校验失败")
        hyper = Hyperparameters(
            signal_variance=record["signal_variance"],
            length_scales=np.asarray(record["length_scales"], dtype=float),
            noise_variance=record["noise_variance"],
        )
        standardizer = Standardizer(
            input_mean=arrays["input_mean"],
            input_std=arrays["input_std"],
            active=arrays["active"].astype(bool),
            target_mean=float(header["target_mean"]),
            target_std=float(header["target_std"]),
        )
        feature_config = FeatureConfig(**header["feature_config"])
    except (KeyError, TypeError) as e:
        raise FormatError(f"模型头部缺少字段: {e}") from e

    # 只使用保存时实际生效的抖动级别，分解与训练时一致
    ladder = (float(header.get("jitter", 0.0)) / hyper.signal_variance,)
    if not ladder[0] > 0:
        raise FormatError(f"抖动量非法: {header.get('jitter')}")
    model = condition(arrays["X"], arrays["y"], hyper, standardizer, feature_config, ladder)
    stored = arrays["alpha"]
    scale = max(1.0, float(np.max(np.abs(stored))) if stored.size else 1.0)
    if (
        stored.shape != model.alpha.shape
        or np.max(np.abs(model.alpha - stored)) > ALPHA_TOLERANCE * scale
    ):
        raise FormatError("重建的 alpha 与存储值不一致")
    logger.info(
        f"模型已加载: {path} (n={model.n_train}, "
        f"特征 {feature_config.axes}/{feature_config.resolution_deg:g}°)"
    )
    return model
