"""Image quality and segmentation metrics.

PSNR and single-scale SSIM for restoration quality, confusion-matrix
statistics (precision, recall, F1, IOU) for binary segmentation and mean
IOU for multiclass label maps. All ratio metrics use the 0/0 -> 0
convention so empty-prediction edge cases are total.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError
from .images import check_same_shape

# Single-scale SSIM parameters: 11x11 Gaussian window with sigma 1.5,
# stabilizers K1 = 0.01 and K2 = 0.03 on a unit dynamic range, luma
# weights 0.299 / 0.587 / 0.114 for color inputs.
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class MetricsReport:
    psnr_db: float          # math.inf when the images are identical
    ssim: float


@dataclass
class SegStats:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    iou: float


def _zero_safe(num, den):
    return num / den if den else 0.0


def psnr(a, b, peak=1.0):
    """Peak signal-to-noise ratio in dB; inf for identical inputs."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    if peak <= 0:
        raise ParameterError(f"peak must be positive, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def to_luma(img):
    """Collapse a color image to luma; grayscale passes through."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        w = LUMA_WEIGHTS
        return w[0] * img[:, :, 0] + w[1] * img[:, :, 1] + w[2] * img[:, :, 2]
    raise ParameterError(f"expected (H, W) or (H, W, 3) image, got {img.shape}")


def _gaussian_window(size, sigma):
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    return w / w.sum()


def _windowed_mean(img, win):
    # Separable correlation; the border is cropped afterwards so the padding
    # mode never reaches the result.
    tmp = ndimage.correlate1d(img, win, axis=0, mode="constant")
    return ndimage.correlate1d(tmp, win, axis=1, mode="constant")


def ssim(a, b):
    """Mean single-scale SSIM over all positions where the window fits."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    x = to_luma(a)
    y = to_luma(b)
    if min(x.shape) < SSIM_WINDOW:
        raise ParameterError(
            f"image {x.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")

    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_x = _windowed_mean(x, win)
    mu_y = _windowed_mean(y, win)
    xx = _windowed_mean(x * x, win)
    yy = _windowed_mean(y * y, win)
    xy = _windowed_mean(x * y, win)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y

    c1 = SSIM_K1 * SSIM_K1
    c2 = SSIM_K2 * SSIM_K2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    ssim_map = num / den

    half = SSIM_WINDOW // 2
    valid = ssim_map[half:-half, half:-half]
    return float(valid.mean())


def compare_images(a, b, peak=1.0):
    """PSNR and SSIM of one image pair."""
    return MetricsReport(psnr_db=psnr(a, b, peak), ssim=ssim(a, b))


def binary_seg_stats(pred, gt):
    """Confusion counts and derived ratios for binary masks."""
    pred = np.asarray(pred).astype(bool)
    gt = np.asarray(gt).astype(bool)
    check_same_shape(pred, gt, "masks")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = int(np.count_nonzero(~pred & ~gt))
    precision = _zero_safe(tp, tp + fp)
    recall = _zero_safe(tp, tp + fn)
    f1 = _zero_safe(2.0 * precision * recall, precision + recall)
    iou = _zero_safe(tp, tp + fp + fn)
    return SegStats(tp=tp, fp=fp, fn=fn, tn=tn,
                    precision=precision, recall=recall, f1=f1, iou=iou)


def multiclass_miou(pred, gt, n_classes, ignore_label=None):
    """Mean IOU over the classes present in the ground truth.

    Pixels whose ground-truth label equals ignore_label are excluded from
    every count. Labels must lie in [0, n_classes) or equal ignore_label.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    check_same_shape(pred, gt, "label maps")
    if n_classes <= 0:
        raise ParameterError(f"n_classes must be positive, got {n_classes}")

    def check_labels(arr, name):
        vals = arr if ignore_label is None else arr[arr != ignore_label]
        if vals.size and (vals.min() < 0 or vals.max() >= n_classes):
            raise ParameterError(
                f"{name} contains labels outside [0, {n_classes}) "
                f"that are not ignore_label")
    check_labels(pred, "pred")
    check_labels(gt, "gt")

    valid = np.ones(gt.shape, dtype=bool)
    if ignore_label is not None:
        valid &= gt != ignore_label
    g = gt[valid].astype(np.int64)
    p = pred[valid].astype(np.int64)
    # Predictions equal to ignore_label land in an extra column: they are
    # misses for the true class but count as no class's false positive.
    p = np.where(p == ignore_label, n_classes, p) if ignore_label is not None else p
    conf = np.bincount(g * (n_classes + 1) + p,
                       minlength=n_classes * (n_classes + 1))
    conf = conf.reshape(n_classes, n_classes + 1)

    tp = np.diag(conf[:, :n_classes])
    gt_count = conf.sum(axis=1)
    pred_count = conf[:, :n_classes].sum(axis=0)
    present = gt_count > 0
    if not present.any():
        return 0.0
    union = gt_count + pred_count - tp
    iou = tp[present] / union[present]
    return float(iou.mean())
