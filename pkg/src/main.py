#!/usr/bin/env python3
"""
Tire GPR - 智能轮胎侧向力估计流程
命令行入口
"""

import sys
from pathlib import Path
from typing import Annotated, Callable, List, Optional

import typer

# 添加 src 目录到路径
sys.path.insert(0, str(Path(__file__).parent))

from controllers import PipelineController  # noqa: E402
from utils import DataError, Logger, TireGprError  # noqa: E402
from utils.config import PipelineConfig  # noqa: E402
from utils.path_helper import get_default_config_path, resolve_path  # noqa: E402

logger = Logger.get_logger("Main")

app = typer.Typer(
    help="智能轮胎侧向力估计: 合成数据、预处理、GPR 训练、预测与评估",
    add_completion=False,
    no_args_is_help=True,
)

ConfigOpt = Annotated[
    Optional[Path], typer.Option("--config", help="配置文件（section.key = value）")
]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="覆盖 seeds.global")]
InOpt = Annotated[Path, typer.Option("--in", help="输入文件")]
OutOpt = Annotated[Path, typer.Option("--out", help="输出目录")]
ModelOpt = Annotated[Path, typer.Option("--model", help="模型文件")]
AxesOpt = Annotated[Optional[str], typer.Option("--axes", help="输入轴，如 xyz、yz、y")]
ResolutionOpt = Annotated[
    Optional[float], typer.Option("--resolution", help="接地区分辨率（度）")
]
RepsOpt = Annotated[Optional[int], typer.Option("--reps", min=1, help="交叉验证重复次数")]


def _load_config(
    config: Optional[Path],
    seed: Optional[int] = None,
    axes: Optional[str] = None,
    resolution: Optional[float] = None,
) -> PipelineConfig:
    """读取配置、应用命令行覆盖并重新校验"""
    path = config or get_default_config_path()
    pipeline_config = PipelineConfig(str(path) if path else None)
    if seed is not None:
        pipeline_config.set("seeds.global", seed)
    if axes is not None:
        pipeline_config.set("features.axes", axes)
    if resolution is not None:
        pipeline_config.set("features.resolution_deg", resolution)
    pipeline_config.validate()

    log_dir = pipeline_config.get("logging.dir") or None
    if log_dir:
        log_dir = str(resolve_path(log_dir))
    Logger.setup(log_dir=log_dir, level=pipeline_config.get("logging.level", "INFO"))
    return pipeline_config


def _execute(
    build: Callable[[], PipelineConfig],
    action: Callable[[PipelineController], List[Path]],
) -> None:
    """
    运行命令并打印产物清单；模块错误以单行诊断退出

    Args:
        build: 构造配置
        action: 在控制器上执行的命令
    """
    controller: Optional[PipelineController] = None
    try:
        controller = PipelineController(build())
        paths = action(controller)
    except (TireGprError, OSError) as e:
        stage = controller.current_stage if controller else "config"
        # 文件系统错误按数据/IO 错误退出
        code = getattr(e, "exit_code", DataError.exit_code)
        logger.debug(f"阶段 {stage} 失败", exc_info=True)
        message = str(e).replace("\n", " ")
        typer.echo(f"error [{stage}]: {type(e).__name__}: {message}", err=True)
        raise typer.Exit(code=code)

    for path in paths:
        typer.echo(f"artifact: {path}")


@app.command()
def generate(
    out: OutOpt = Path("out"),
    dataset: Annotated[int, typer.Option("--set", min=1, max=2, help="数据集 1 或 2")] = 1,
    maneuver: Annotated[
        Optional[Path], typer.Option("--maneuver", help="单工况描述文件")
    ] = None,
    noise: Annotated[bool, typer.Option("--noise/--no-noise", help="是否加噪声")] = True,
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """生成合成原始流 CSV"""
    _execute(
        lambda: _load_config(config, seed),
        lambda c: c.generate(dataset, out, maneuver, noise),
    )


@app.command()
def preprocess(
    in_path: InOpt, out: OutOpt = Path("out"), config: ConfigOpt = None, seed: SeedOpt = None
):
    """原始流 -> 0.5° 接地区特征 CSV"""
    _execute(lambda: _load_config(config, seed), lambda c: c.preprocess(in_path, out))


@app.command()
def train(
    in_path: InOpt,
    out: OutOpt = Path("out"),
    axes: AxesOpt = None,
    resolution: ResolutionOpt = None,
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """训练 GPR 模型"""
    _execute(
        lambda: _load_config(config, seed, axes, resolution), lambda c: c.train(in_path, out)
    )


@app.command()
def predict(
    model: ModelOpt,
    in_path: InOpt,
    out: OutOpt = Path("out"),
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """逐圈预测侧向力与区间"""
    _execute(lambda: _load_config(config, seed), lambda c: c.predict(model, in_path, out))


@app.command()
def evaluate(
    in_path: InOpt,
    out: OutOpt = Path("out"),
    svg: Annotated[bool, typer.Option("--svg/--no-svg", help="是否输出 SVG")] = True,
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """由预测 CSV 计算指标与绘图数据"""

    def action(c: PipelineController) -> List[Path]:
        paths, report = c.evaluate(in_path, out, svg)
        for key, value in report.as_dict().items():
            typer.echo(f"metric: {key} = {value:.6g}")
        return paths

    _execute(lambda: _load_config(config, seed), action)


@app.command("study-inputs")
def study_inputs(
    in_path: InOpt,
    out: OutOpt = Path("out"),
    reps: RepsOpt = None,
    resolution: ResolutionOpt = None,
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """不同加速度轴组合的留出法研究"""
    _execute(
        lambda: _load_config(config, seed, resolution=resolution),
        lambda c: c.study_inputs(in_path, out, reps),
    )


@app.command("study-resolution")
def study_resolution(
    in_path: InOpt,
    out: OutOpt = Path("out"),
    reps: RepsOpt = None,
    axes: AxesOpt = None,
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """不同接地区分辨率的留出法研究"""
    _execute(
        lambda: _load_config(config, seed, axes=axes),
        lambda c: c.study_resolution(in_path, out, reps),
    )


@app.command()
def correlate(
    in_path: InOpt, out: OutOpt = Path("out"), config: ConfigOpt = None, seed: SeedOpt = None
):
    """各测点加速度与侧向力的相关曲线"""
    _execute(lambda: _load_config(config, seed), lambda c: c.correlate(in_path, out))


@app.command()
def crossval(
    in_path: InOpt,
    out: OutOpt = Path("out"),
    k: Annotated[Optional[int], typer.Option("--k", min=2, help="折数")] = None,
    axes: AxesOpt = None,
    resolution: ResolutionOpt = None,
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """k 折交叉验证的折外预测"""
    _execute(
        lambda: _load_config(config, seed, axes, resolution),
        lambda c: c.crossval(in_path, out, k),
    )


@app.command()
def analyze(
    in_path: InOpt, out: OutOpt = Path("out"), config: ConfigOpt = None, seed: SeedOpt = None
):
    """按侧偏角的平均加速度、接地区中心序列与峰值"""
    _execute(lambda: _load_config(config, seed), lambda c: c.analyze(in_path, out))


@app.command()
def bench(
    model: ModelOpt,
    in_path: InOpt,
    out: OutOpt = Path("out"),
    config: ConfigOpt = None,
    seed: SeedOpt = None,
):
    """单点预测耗时"""
    _execute(lambda: _load_config(config, seed), lambda c: c.bench(model, in_path, out))


def main():
    """主函数"""
    app()


if __name__ == "__main__":
    main()
