"""
결과 출력: CSV (pandas), SVG (matplotlib), 텍스트 보고서
"""

import os
from typing import List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from src.models.errors import DomainError  # noqa: E402
from src.models.schemas import (  # noqa: E402
    AdatomSpec,
    RegimeReport,
    Resonance,
    SurvivalSeries,
)
from src.utils.report_manager import report_manager  # noqa: E402

SERIES_COLUMNS = ["t", "p00", "re_psi_s", "im_psi_s", "re_psi_r", "im_psi_r", "method"]
FLOAT_FORMAT = "%.17g"
SVG_HASH_SALT = "adatom-survival"

CsvPayload = Union[SurvivalSeries, Sequence[SurvivalSeries], RegimeReport, pd.DataFrame]


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _write_frame(frame: pd.DataFrame, path: str):
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def report_frame(report: RegimeReport) -> pd.DataFrame:
    """RegimeReport 스칼라 값을 한 행짜리 표로"""
    row = report.model_dump(exclude={"dips", "modulation_peaks"})
    row["modulation_peaks"] = " ".join(repr(float(f)) for f in report.modulation_peaks)
    row["n_dips"] = len(report.dips)
    return pd.DataFrame([row])


def dips_frame(report: RegimeReport) -> pd.DataFrame:
    return pd.DataFrame(
        [dip.model_dump() for dip in report.dips],
        columns=["t_dip", "depth", "phase_residual"],
    )


def emit_csv(payload: CsvPayload, path: str) -> str:
    """시계열/보고서/표를 CSV 로 저장 (17자리 유효숫자)"""
    if isinstance(payload, SurvivalSeries):
        frame = payload.to_frame()
    elif isinstance(payload, RegimeReport):
        frame = report_frame(payload)
        root, ext = os.path.splitext(path)
        _write_frame(dips_frame(payload), f"{root}_dips{ext or '.csv'}")
    elif isinstance(payload, pd.DataFrame):
        frame = payload
    else:
        series = list(payload)
        if not series or not all(isinstance(s, SurvivalSeries) for s in series):
            raise DomainError("emit_csv expects SurvivalSeries, a list of them, or a report")
        frame = pd.concat([s.to_frame() for s in series], ignore_index=True)
    _write_frame(frame, path)
    return path


def comparison_frame(reference: SurvivalSeries, candidate: SurvivalSeries) -> pd.DataFrame:
    """두 방법의 P₀₀ 비교 표 (t, p00_<방법>, p00_<방법>, abs_diff, max_abs_diff)"""
    if reference.method == candidate.method:
        raise DomainError("comparison requires two different methods")
    if reference.times.shape != candidate.times.shape or not np.array_equal(
        reference.times, candidate.times
    ):
        raise DomainError("comparison requires identical time grids")
    diff = np.abs(reference.p00 - candidate.p00)
    return pd.DataFrame(
        {
            "t": reference.times,
            f"p00_{reference.method.value}": reference.p00,
            f"p00_{candidate.method.value}": candidate.p00,
            "abs_diff": diff,
            "max_abs_diff": float(diff.max()),
        }
    )


def emit_comparison_csv(
    reference: SurvivalSeries, candidate: SurvivalSeries, path: str
) -> float:
    """비교 CSV 저장 후 최대 |ΔP₀₀| 반환"""
    frame = comparison_frame(reference, candidate)
    _write_frame(frame, path)
    return float(frame["max_abs_diff"].iloc[0])


def emit_text(text: str, path: str) -> str:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path


def pole_report_text(spec: AdatomSpec, res: Resonance, fgr: tuple) -> str:
    return report_manager.format_report(
        "pole_report",
        substrate=spec.substrate.kind.value,
        epsilon0=spec.epsilon0,
        v0=spec.v0,
        epsilon_r=res.epsilon_r,
        gamma0=res.gamma0,
        delta0=res.delta0,
        re_amplitude=res.amplitude.real,
        im_amplitude=res.amplitude.imag,
        re_residue_a=res.residue_a.real,
        im_residue_a=res.residue_a.imag,
        weight=res.weight,
        beta=res.beta,
        band_half=res.band_half.value if res.band_half else "none",
        iterations=res.iterations,
        residual=res.residual,
        fgr_epsilon_r=float(fgr[0]),
        fgr_gamma0=float(fgr[1]),
    )


def regime_report_text(report: RegimeReport) -> str:
    values = report.model_dump(exclude={"dips", "modulation_peaks"})
    return report_manager.format_report(
        "regime_report",
        modulation_peaks=" ".join(repr(float(f)) for f in report.modulation_peaks),
        n_dips=len(report.dips),
        **values,
    )


def _configure_svg():
    plt.rcParams["svg.fonttype"] = "none"
    plt.rcParams["svg.hashsalt"] = SVG_HASH_SALT


def emit_svg(
    series: Union[SurvivalSeries, List[SurvivalSeries]],
    path: str,
    res: Optional[Resonance] = None,
    report: Optional[RegimeReport] = None,
    title: Optional[str] = None,
) -> str:
    """log-log P₀₀ 그림 (t_R 표시, FGR/SC-FGR 겹쳐 그리기, 변조 인셋)"""
    series_list = [series] if isinstance(series, SurvivalSeries) else list(series)
    _configure_svg()
    fig, ax = plt.subplots(figsize=(7.0, 5.0))

    for s in series_list:
        mask = (s.times > 0) & (s.p00 > 0)
        ax.loglog(s.times[mask], s.p00[mask], lw=1.0, label=s.method.value)

    t_all = np.concatenate([s.times[s.times > 0] for s in series_list])
    if res is not None and res.gamma0 > 0 and t_all.size:
        t_line = np.geomspace(t_all.min(), t_all.max(), 400)
        ax.loglog(t_line, np.exp(-2 * res.gamma0 * t_line), "k:", lw=0.8, label="FGR")
        ax.loglog(
            t_line, res.weight * np.exp(-2 * res.gamma0 * t_line), "k--", lw=0.8, label="SC-FGR"
        )

    if report is not None:
        ax.axvline(report.t_r, color="tab:red", lw=0.8, ls="-.", label="t_R", gid="t_R_marker")

    floor = min(float(s.p00[s.p00 > 0].min()) for s in series_list if np.any(s.p00 > 0))
    ax.set_ylim(max(floor, 1e-30) / 2, 2.0)
    ax.set_xlabel("t (hbar/V)")
    ax.set_ylabel("survival probability P00")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower left", fontsize=8)

    if report is not None and series_list:
        _modulation_inset(ax, series_list[0], report)

    _ensure_parent(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _modulation_inset(ax, series: SurvivalSeries, report: RegimeReport):
    """t_R 이후 t²P₀₀ 의 변조"""
    mask = series.times >= report.t_r
    if np.count_nonzero(mask) < 2:
        return
    inset = ax.inset_axes([0.58, 0.58, 0.38, 0.36])
    t = series.times[mask]
    inset.semilogx(t, t**2 * series.p00[mask], lw=0.6, color="tab:blue")
    inset.set_xlabel("t", fontsize=7)
    inset.set_ylabel("t² P00", fontsize=7)
    inset.tick_params(labelsize=6)
