"""
静态预设表

Cityscapes 类别、权重系数表、STB 组合、toy 规模预设等。
"""

# Cityscapes 19 个评测类别（按 trainId 排序）
CITYSCAPES_CLASSES = [
    "road", "sidewalk", "building", "wall", "fence", "pole",
    "traffic light", "traffic sign", "vegetation", "terrain", "sky",
    "person", "rider", "car", "truck", "bus", "train", "motorcycle", "bicycle",
]

# 官方 labelId -> trainId 表（0..33），255 表示 ignore
LABELID_TO_TRAINID = {
    0: 255, 1: 255, 2: 255, 3: 255, 4: 255, 5: 255, 6: 255,
    7: 0, 8: 1, 9: 255, 10: 255,
    11: 2, 12: 3, 13: 4,
    14: 255, 15: 255, 16: 255,
    17: 5, 18: 6, 19: 7, 20: 8,
    21: 9, 22: 10, 23: 11, 24: 12, 25: 13, 26: 14, 27: 15, 28: 16, 29: 17, 30: 18,
    31: 255, 32: 255, 33: 255,
}

IGNORE_INDEX = 255

# 行车安全相关的 12 个重要类别的权重系数 w_i = 类别平衡系数 × 注意力系数
IMPORTANT_CLASS_WEIGHTS = {
    "road": 1.25595,
    "sidewalk": 1.377,
    "building": 1.299,
    "vegetation": 1.3179,
    "person": 1.47645,
    "rider": 1.6674,
    "car": 1.35555,
    "truck": 1.62975,
    "bus": 1.64325,
    "train": 1.62975,
    "motorcycle": 1.72935,
    "bicycle": 1.57605,
}

# 注意力系数：重要类别 1.5，其余 1.0
ATTENTION_IMPORTANT = 1.5
ATTENTION_DEFAULT = 1.0

# 总数 24 个 STB 的四种分配方式；[2, 2, 18, 2] 为基准，其余由迁移学习初始化
STB_COMBINATIONS = {
    "3-5-7-9": [3, 5, 7, 9],
    "2-2-2-18": [2, 2, 2, 18],
    "2-2-9-9": [2, 2, 9, 9],
    "2-2-18-2": [2, 2, 18, 2],
}
STB_TRANSFER_SOURCE = "2-2-18-2"

# 完整规模的编解码器参数
FULL_CODEC = {
    "embed_dim": 96,
    "depths": [2, 2, 18, 2],
    "heads": [3, 6, 12, 24],
    "window_size": 7,
}

# toy 规模编解码器参数
TOY_CODEC = {
    "embed_dim": 24,
    "depths": [1, 1, 2, 1],
    "heads": [1, 2, 4, 8],
    "window_size": 4,
}

# 评测 SNR 网格: 1..25 dB, 步长 3
DEFAULT_SNR_GRID = [1.0, 4.0, 7.0, 10.0, 13.0, 16.0, 19.0, 22.0, 25.0]


def synthetic_class_names(n_cls: int) -> list:
    """合成数据集的类别名：background + 形状类别 + 最后一个稀有小目标类别"""
    kinds = ["rectangle", "ellipse", "triangle", "diamond"]
    names = ["background"]
    for i in range(1, n_cls - 1):
        kind = kinds[(i - 1) % len(kinds)]
        names.append(kind if i <= len(kinds) else f"{kind}_{i}")
    if n_cls >= 2:
        names.append("rare_dot")
    return names
