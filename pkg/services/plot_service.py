"""
绘图服务 - 由结果 CSV 生成静态图片
"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from loguru import logger  # noqa: E402

from core.errors import ConfigurationError  # noqa: E402
from core.metrics import read_results  # noqa: E402


class PlotService:
    """mIoU-SNR / mIoU-R 折线图"""

    def plot(self, csv_path, out_path=None, x: str = "snr_db") -> Path:
        if x not in ("snr_db", "R"):
            raise ConfigurationError(f"横轴只能是 snr_db 或 R: {x}")
        df = read_results(csv_path)
        out_path = Path(out_path) if out_path else Path(csv_path).with_suffix(".png")
        series_keys = ["scheme", "velocity_kmh", "R"] if x == "snr_db" else ["scheme", "velocity_kmh", "snr_db"]

        fig, ax = plt.subplots(figsize=(6, 4))
        for key, group in df.groupby(series_keys, dropna=False, sort=False):
            scheme, velocity, third = key
            group = group.sort_values(x)
            if x == "snr_db":
                label = f"{scheme}, {velocity:g} km/h" + ("" if third != third else f", R={third:g}")
            else:
                label = f"{scheme}, {velocity:g} km/h, {third:g} dB"
            ax.plot(group[x], group["miou"], marker="o", label=label)

        ax.set_xlabel("SNR (dB)" if x == "snr_db" else "compression ratio R")
        ax.set_ylabel("mIoU")
        ax.set_ylim(0.0, 1.0)
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=7)
        fig.tight_layout()
        out_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out_path, dpi=120)
        plt.close(fig)
        logger.info(f"📈 图已保存: {out_path}")
        return out_path


# 全局绘图服务实例
plot_service = PlotService()
