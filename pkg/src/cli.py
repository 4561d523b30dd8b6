"""
흡착 원자 생존 확률 명령행 도구

하위 명령: ldos, pole, survival, regimes, oracle, figure2, sweep
종료 코드: 0 성공, 1 도메인/입출력 오류, 2 수치 비수렴
"""

import argparse
import os
import sys
from typing import List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from pydantic import ValidationError

from src.config.presets import preset_manager
from src.config.run_config import RunConfig, load_config
from src.models.errors import ConfigError, ConvergenceError, DomainError
from src.models.schemas import (
    AdatomSpec,
    FiniteLattice,
    MomentReference,
    SurvivalMethod,
    SurvivalSeries,
)
from src.physics.analysis import analyze_regimes, sweep_coupling
from src.physics.dynamics import (
    long_time_asymptote,
    make_time_grid,
    short_time,
    survival_decomposed,
    survival_direct,
)
from src.physics.oracle import propagate, reflection_time
from src.physics.resonance import (
    find_bound_states,
    find_pole,
    first_pole_approx,
    ldos0,
    require_no_bound_state,
    second_moment,
)
from src.physics.substrate_green import substrate_ldos
from src.reporting.emitters import (
    emit_comparison_csv,
    emit_csv,
    emit_svg,
    emit_text,
    pole_report_text,
    regime_report_text,
)
from src.utils.console import console
from src.utils.report_manager import report_manager

COMMANDS = ["ldos", "pole", "survival", "regimes", "oracle", "figure2", "sweep"]
EQUIVALENCE_TOLERANCE = 1e-6


class SurvivalRunner:
    """설정 하나로 하위 명령을 실행하고 결과 파일을 만든다"""

    def __init__(self, config: RunConfig, out_dir: Optional[str] = None):
        self.config = config
        self.out_dir = out_dir or config.output.directory
        self.spec: AdatomSpec = config.system.to_spec()

    def _path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _times(self) -> np.ndarray:
        grid = self.config.time
        return make_time_grid(grid.t_min, grid.t_max, grid.points, grid.spacing)

    def _find_pole(self):
        return find_pole(self.spec, tol=self.config.tolerances.newton)

    def run(self, command: str) -> int:
        console.step(
            f"{command}: {self.spec.substrate.kind.value}, "
            f"ε₀/V={self.spec.epsilon0}, V₀/V={self.spec.v0}"
        )
        if command == "ldos":
            return self.run_ldos()
        elif command == "pole":
            return self.run_pole()
        elif command == "survival":
            return self.run_survival()
        elif command == "regimes":
            return self.run_regimes()
        elif command == "oracle":
            return self.run_oracle()
        elif command == "figure2":
            return self.run_figure2()
        elif command == "sweep":
            return self.run_sweep()
        raise DomainError(f"unknown command {command!r}")

    def run_ldos(self) -> int:
        """N₀(ε), N₁⁽⁰⁾(ε) 실축 그리드"""
        if self.spec.v0 != 0:
            states = find_bound_states(self.spec)
            if states:
                # 밴드 밖 극은 연속 LDoS 에 나타나지 않으므로 따로 기록하고 실패 처리
                frame = pd.DataFrame([state.model_dump() for state in states])
                console.saved(emit_csv(frame, self._path("bound_states.csv")))
                require_no_bound_state(self.spec)
        section = self.config.ldos
        lower, upper = self.spec.substrate.band_edges
        energies = np.linspace(lower - section.margin, upper + section.margin, section.points)
        # 발산점(분기점, 결합 없는 준위)은 그리드에서 제외
        excluded = list(self.spec.substrate.branch_points)
        if self.spec.v0 == 0:
            excluded.append(self.spec.epsilon0)
        energies = energies[~np.isin(energies, excluded)]

        frame = pd.DataFrame(
            {
                "energy": energies,
                "ldos0": ldos0(energies, self.spec),
                "substrate_ldos": substrate_ldos(energies, self.spec.substrate),
            }
        )
        console.saved(emit_csv(frame, self._path("ldos.csv")))
        return 0

    def run_pole(self) -> int:
        res = self._find_pole()
        text = pole_report_text(self.spec, res, first_pole_approx(self.spec))
        print(text, end="")
        console.saved(emit_text(text, self._path("pole.txt")))
        return 0

    def _short_time(self, times: np.ndarray) -> SurvivalSeries:
        reference = self.config.methods.moment_reference
        m2 = self.spec.v0**2 if self.spec.v0 > 0 else 0.0
        if m2 > 0 and reference == MomentReference.EPSILON_R:
            m2 = second_moment(self.spec, reference)
        valid = times if m2 == 0 else times[times < 1.0 / np.sqrt(m2)]
        if valid.size < times.size:
            console.warn(
                f"short-time law evaluated on {valid.size}/{times.size} points "
                f"(t < {1.0 / np.sqrt(m2):.4g})"
            )
        return short_time(self.spec, valid, reference)

    def _oracle_times(self, lat: FiniteLattice) -> np.ndarray:
        window = reflection_time(lat)
        grid = self.config.time
        t_max = grid.t_max
        if t_max >= window:
            console.warn(
                f"oracle grid clipped to the reflection window t < {window:.4g} (L={lat.size})"
            )
            t_max = np.nextafter(window, 0.0)
        return make_time_grid(grid.t_min, t_max, self.config.oracle.points, grid.spacing)

    def _oracle_lattice(self) -> FiniteLattice:
        return FiniteLattice(size=self.config.oracle.size, spec=self.spec)

    def run_survival(self) -> int:
        """설정된 방법별 SurvivalSeries 출력 (+ direct/decomposed 비교)"""
        times = self._times()
        methods = self.config.survival_methods
        results = {}
        res = None
        for method in methods:
            console.step(f"method = {method.value}")
            if method in (SurvivalMethod.DECOMPOSED, SurvivalMethod.LONG_TIME) and res is None:
                res = self._find_pole()
            if method == SurvivalMethod.DIRECT:
                series = survival_direct(self.spec, times, tol=self.config.tolerances.quadrature)
            elif method == SurvivalMethod.DECOMPOSED:
                series = survival_decomposed(self.spec, res, times)
            elif method == SurvivalMethod.SHORT_TIME:
                series = self._short_time(times)
            elif method == SurvivalMethod.LONG_TIME:
                series = long_time_asymptote(self.spec, res, times)
            else:
                lat = self._oracle_lattice()
                series = propagate(
                    lat, self._oracle_times(lat), tol=self.config.tolerances.chebyshev
                )
            results[method] = series
            console.saved(emit_csv(series, self._path(f"survival_{method.value}.csv")))

        status = 0
        if SurvivalMethod.DIRECT in results and SurvivalMethod.DECOMPOSED in results:
            max_diff = emit_comparison_csv(
                results[SurvivalMethod.DIRECT],
                results[SurvivalMethod.DECOMPOSED],
                self._path("survival_comparison.csv"),
            )
            if max_diff > EQUIVALENCE_TOLERANCE:
                console.error(f"direct/decomposed differ by {max_diff:.3e}")
                status = 2
            else:
                console.success(f"direct/decomposed max |ΔP₀₀| = {max_diff:.3e}")

        console.saved(emit_svg(list(results.values()), self._path("survival.svg"), res=res))
        return status

    def run_regimes(self) -> int:
        res = self._find_pole()
        tolerances = self.config.tolerances
        report, series = analyze_regimes(
            self.spec,
            res,
            self._times(),
            exp_window=tolerances.exp_window,
            tail_window=tolerances.tail_window,
        )
        text = regime_report_text(report)
        print(text, end="")
        console.saved(emit_text(text, self._path("regimes.txt")))
        console.saved(emit_csv(report, self._path("regimes.csv")))
        console.saved(emit_csv(series, self._path("regimes_series.csv")))
        return 0

    def run_oracle(self) -> int:
        """유한 격자 전파와 direct 방법 비교"""
        lat = self._oracle_lattice()
        times = self._oracle_times(lat)
        oracle = propagate(lat, times, tol=self.config.tolerances.chebyshev)
        direct = survival_direct(self.spec, times, tol=self.config.tolerances.quadrature)
        console.saved(emit_csv(oracle, self._path("oracle.csv")))
        max_diff = emit_comparison_csv(direct, oracle, self._path("oracle_comparison.csv"))

        text = report_manager.format_report(
            "oracle_summary",
            size=lat.size,
            attach_site=f"{lat.attach_site[0]},{lat.attach_site[1]}",
            reflection_time=reflection_time(lat),
            points=times.size,
            max_abs_diff=max_diff,
        )
        print(text, end="")
        console.saved(emit_text(text, self._path("oracle.txt")))
        if max_diff > EQUIVALENCE_TOLERANCE:
            console.error(f"oracle/direct differ by {max_diff:.3e}")
            return 2
        return 0

    def run_figure2(self) -> int:
        """log-log P₀₀ 그림 한 번에 재현 (t_R 표시, 변조 인셋)"""
        res = self._find_pole()
        tolerances = self.config.tolerances
        report, series = analyze_regimes(
            self.spec,
            res,
            self._times(),
            exp_window=tolerances.exp_window,
            tail_window=tolerances.tail_window,
        )
        console.saved(emit_csv(series, self._path("figure2.csv")))
        console.saved(emit_csv(report, self._path("figure2_regimes.csv")))
        console.saved(
            emit_svg(
                series,
                self._path("figure2.svg"),
                res=res,
                report=report,
                title=f"eps0/V = {self.spec.epsilon0:g}, V0/V = {self.spec.v0:g}",
            )
        )
        dip = max(report.dips, key=lambda d: d.depth, default=None)
        if dip is not None:
            console.success(f"collapse at t = {dip.t_dip:.6g}, depth {dip.depth:.3g}")
        else:
            console.warn("no collapse dip resolved")
        return 0

    def run_sweep(self) -> int:
        section = self.config.sweep
        table = sweep_coupling(self.spec, section.v0_values, points=section.points)
        console.saved(emit_csv(table, self._path("sweep.csv")))
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="흡착 원자 생존 확률 계산기",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
사용 예시:
  python survival_cli.py pole                          # 기본 설정 (ε₀/V=2, V₀/V=0.4)
  python survival_cli.py figure2 --out out/fig2        # 그림 재현
  python survival_cli.py survival --config config/figure2.conf
  python survival_cli.py oracle --preset chain_center

환경변수 설정:
  SURVIVAL_THREADS=4    시간 그리드 계산 스레드 수
        """,
    )
    parser.add_argument("command", choices=COMMANDS, help="실행할 하위 명령")
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--config", help="key = value 설정 파일 경로")
    source.add_argument(
        "--preset", choices=preset_manager.list_presets(), help="이름 붙은 설정 프리셋"
    )
    parser.add_argument("--out", help="출력 디렉토리 (설정의 [output] directory 대신)")
    parser.add_argument("--quiet", action="store_true", help="진행 상황 출력 끄기")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        return load_config(args.config)
    if args.preset:
        return preset_manager.get_config(args.preset)
    return RunConfig()


def main(argv: Optional[List[str]] = None) -> int:
    """메인 실행 함수"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    console.quiet = args.quiet

    try:
        config = resolve_config(args)
        return SurvivalRunner(config, args.out).run(args.command)
    except ConfigError as e:
        console.error(f"설정 오류: {e}")
        return 1
    except (DomainError, ValidationError) as e:
        console.error(f"도메인 오류: {e}")
        return 1
    except OSError as e:
        console.error(f"입출력 오류: {e}")
        return 1
    except ConvergenceError as e:
        console.error(f"수치 비수렴: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
