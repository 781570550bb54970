"""Command-line surface: sample, cdf, verify and selftest.

Exit codes: 0 success, 1 statistical failure, 2 usage or config error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

from bmanova.densities import cdf_largest_gsv, cdf_largest_gsv_2f1
from bmanova.errors import ConvergenceError, NumericalError, ParameterError
from bmanova.harness import (config_digest, monte_carlo, run_identity_suite,
                             verify_figure)
from bmanova.mhg import SeriesControl
from bmanova.sampler import ManovaParams, RngStream, sample_beta_manova_gsv
from bmanova.utils.validators import validate_experiment_config, validate_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
FIGURE_CONFIGS = {1: "figure1.json", 2: "figure2.json"}
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

SVG_WIDTH, SVG_HEIGHT, SVG_MARGIN = 800, 600, 60


def make_grid(start: float, step: float, stop: float) -> np.ndarray:
    """start, start+step, ... up to stop inclusive, rounded to 12 decimals."""
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(count), 12)


def parse_grid(text: str) -> Tuple[float, float, float]:
    try:
        start, step, stop = (float(v) for v in text.split(":"))
    except ValueError:
        raise ParameterError(f"grid must be START:STEP:STOP, got {text!r}")
    ok, message = validate_grid(start, step, stop)
    if not ok:
        raise ParameterError(message)
    return start, step, stop


def parse_omega(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ParameterError(f"omega must be a comma-separated list of reals, got {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    params: ManovaParams
    n_samples: int
    seed: int
    grid_spec: Tuple[float, float, float]
    alpha: float
    output_dir: str
    analytic: Optional[ManovaParams]
    document: Dict

    @classmethod
    def from_dict(cls, data: Dict, default_output: str = "results") -> "ExperimentConfig":
        ok, message = validate_experiment_config(data)
        if not ok:
            raise ParameterError(message)
        params = ManovaParams(data['m'], data['n'], data['p'], data['beta'], tuple(data['omega']))
        analytic = None
        if data.get('analytic'):
            overrides = dict(data['analytic'])
            if 'omega' in overrides:
                overrides['omega'] = tuple(overrides['omega'])
            analytic = params.with_overrides(**overrides)
        grid = data['grid']
        return cls(params=params, n_samples=data['n_samples'], seed=data['seed'],
                   grid_spec=(grid['start'], grid['step'], grid['stop']), alpha=data['alpha'],
                   output_dir=data.get('output_dir', default_output), analytic=analytic,
                   document=dict(data))

    @classmethod
    def load(cls, path: Path, default_output: str = "results") -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {path}: {exc}")
        return cls.from_dict(data, default_output)

    @property
    def grid(self) -> np.ndarray:
        return make_grid(*self.grid_spec)

    @property
    def digest(self) -> str:
        return self.digest_for(self.n_samples)

    def digest_for(self, n_samples: int) -> str:
        """Digest of the config with output_dir dropped and n_samples as run."""
        payload = {k: v for k, v in self.document.items() if k != 'output_dir'}
        payload['n_samples'] = n_samples
        return config_digest(payload)


def write_csv(path: Path, frame: pd.DataFrame, digest: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        handle.write(f"# digest={digest}\n")
        frame.to_csv(handle, index=False, lineterminator="\n", float_format="%.17g")


def render_overlay_svg(curve: pd.DataFrame, title: str) -> str:
    """Empirical step curve (blue) and analytic markers (red) on the unit square."""
    span_x = SVG_WIDTH - 2 * SVG_MARGIN
    span_y = SVG_HEIGHT - 2 * SVG_MARGIN

    def px_(x):
        return SVG_MARGIN + span_x * x

    def py_(y):
        return SVG_HEIGHT - SVG_MARGIN - span_y * y

    xs, emp, ana = curve['x'].to_numpy(), curve['empirical'].to_numpy(), curve['analytic'].to_numpy()
    step = [f"M {px_(0.0):.2f} {py_(0.0):.2f}"]
    for x, y in zip(xs, emp):
        step.append(f"H {px_(x):.2f} V {py_(y):.2f}")
    step.append(f"H {px_(1.0):.2f}")
    marks = []
    for x, y in zip(xs, ana):
        cx, cy = px_(x), py_(y)
        marks.append(f"M {cx - 3:.2f} {cy - 3:.2f} L {cx + 3:.2f} {cy + 3:.2f} "
                     f"M {cx - 3:.2f} {cy + 3:.2f} L {cx + 3:.2f} {cy - 3:.2f}")
    ticks = []
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        ticks.append(f'<text x="{px_(v):.2f}" y="{SVG_HEIGHT - SVG_MARGIN + 20}" '
                     f'text-anchor="middle" font-size="12">{v:g}</text>')
        ticks.append(f'<text x="{SVG_MARGIN - 8}" y="{py_(v) + 4:.2f}" '
                     f'text-anchor="end" font-size="12">{v:g}</text>')
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<text x="{SVG_WIDTH / 2:.0f}" y="30" text-anchor="middle" font-size="16">{title}</text>',
        f'<path d="M {px_(0):.2f} {py_(0):.2f} H {px_(1):.2f} M {px_(0):.2f} {py_(0):.2f} '
        f'V {py_(1):.2f}" stroke="black" fill="none"/>',
        *ticks,
        f'<path d="{" ".join(step)}" stroke="blue" stroke-width="1.5" fill="none"/>',
        f'<path d="{" ".join(marks)}" stroke="red" stroke-width="1" fill="none"/>',
        '</svg>',
    ]
    return "\n".join(lines) + "\n"


def write_overlay_html(curve: pd.DataFrame, path: Path, title: str) -> None:
    fig = px.line(curve,
                  x='x',
                  y='empirical',
                  title=title,
                  line_shape='hv',
                  labels={
                      'x': 'x',
                      'empirical': 'P(c1 < x)'
                  })
    fig.update_traces(name='empirical', showlegend=True, line_color='blue')
    fig.add_trace(go.Scatter(x=curve['x'], y=curve['analytic'], mode='markers', name='analytic',
                             marker=dict(symbol='x', color='red', size=6)))
    fig.update_layout(xaxis_range=[0, 1], yaxis_range=[0, 1.02])
    fig.write_html(path, include_plotlyjs='cdn', full_html=True, div_id='overlay')


def _params_from_args(args) -> ManovaParams:
    missing = [name for name in ('m', 'n', 'p', 'beta', 'omega') if getattr(args, name) is None]
    if missing:
        raise ParameterError(f"missing --{', --'.join(missing)} (or pass --config)")
    return ManovaParams(args.m, args.n, args.p, args.beta, tuple(parse_omega(args.omega)))


def _param_document(params: ManovaParams) -> Dict:
    return {'m': params.m, 'n': params.n, 'p': params.p, 'beta': params.beta.beta,
            'omega': list(params.omega)}


def cmd_sample(args) -> int:
    if args.config:
        config = ExperimentConfig.load(args.config)
        params, num, seed = config.params, config.n_samples, config.seed
    else:
        params = _params_from_args(args)
        if args.num is None or args.seed is None:
            raise ParameterError("sample needs --num and --seed (or --config)")
        num, seed = args.num, args.seed
    if num < 1:
        raise ParameterError(f"--num must be positive, got {num}")
    digest = config_digest({'command': 'sample', **_param_document(params), 'n_samples': num, 'seed': seed})
    values = monte_carlo(lambda stream, size: sample_beta_manova_gsv(params, stream, size),
                         num, RngStream(seed))
    frame = pd.DataFrame(values, columns=[f"c{i + 1}" for i in range(params.n)])
    frame.insert(0, 'sample_index', np.arange(num))
    out = Path(args.out)
    write_csv(out, frame, digest)
    print(f"Wrote {num} samples of n={params.n} generalized singular values to {out}")
    return EXIT_OK


def cmd_cdf(args) -> int:
    if args.config:
        config = ExperimentConfig.load(args.config)
        params, grid_spec = config.params, config.grid_spec
    else:
        params = _params_from_args(args)
        if args.grid is None:
            raise ParameterError("cdf needs --grid START:STEP:STOP (or --config)")
        grid_spec = parse_grid(args.grid)
    grid = make_grid(*grid_spec)
    if args.form == 'polynomial':
        values = cdf_largest_gsv(params, grid)
    else:
        results = [cdf_largest_gsv_2f1(params, x, SeriesControl(max_weight=args.max_weight)) for x in grid]
        stalled = [float(x) for x, r in zip(grid, results) if not r.converged]
        if stalled:
            raise ConvergenceError(f"2F1 series did not converge at x = {stalled}")
        values = np.array([r.value for r in results])
    digest = config_digest({'command': 'cdf', 'form': args.form, **_param_document(params),
                            'grid': list(grid_spec)})
    out = Path(args.out)
    write_csv(out, pd.DataFrame({'x': grid, 'analytic_cdf': values}), digest)
    print(f"Wrote {grid.size} CDF values ({args.form} form) to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.config:
        config = ExperimentConfig.load(args.config)
    else:
        name = FIGURE_CONFIGS[args.figure]
        config = ExperimentConfig.load(CONFIG_DIR / name, default_output=f"results/figure{args.figure}")
    n_samples = args.num if args.num is not None else config.n_samples
    out_dir = Path(args.out_dir or config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config.digest_for(n_samples)
    report, curve = verify_figure(config.params, n_samples, config.grid, config.alpha,
                                  RngStream(config.seed), analytic=config.analytic, digest=digest)

    p = config.params
    title = f"m={p.m}, n={p.n}, p={p.p}, beta={p.beta.beta:g}, omega={list(p.omega)}"
    (out_dir / "report.json").write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    write_csv(out_dir / "curve.csv", curve, digest)
    (out_dir / "overlay.svg").write_text(render_overlay_svg(curve, title))
    write_overlay_html(curve, out_dir / "overlay.html", title)

    status = "PASS" if report.passed else "FAIL"
    print(f"{status}: KS {report.ks_stat:.5f} vs critical {report.critical_value:.5f} "
          f"(alpha={report.alpha}, N={report.n_samples}, {report.runtime_ms} ms)")
    print(f"Outputs written to {out_dir}")
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_selftest(args) -> int:
    checks = run_identity_suite()
    for check in checks:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {check.detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', type=Path, help='experiment config JSON')
    parser.add_argument('--m', type=int)
    parser.add_argument('--n', type=int)
    parser.add_argument('--p', type=int)
    parser.add_argument('--beta', type=float)
    parser.add_argument('--omega', help='comma-separated diagonal of Omega, e.g. 1,2,2.5,2.7')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='bmanova',
                                     description='beta-MANOVA sampler, analytic CDF and KS verification')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    sample = sub.add_parser('sample', help='draw generalized singular values to CSV')
    _add_param_flags(sample)
    sample.add_argument('--num', type=int)
    sample.add_argument('--seed', type=int)
    sample.add_argument('--out', required=True)
    sample.set_defaults(handler=cmd_sample)

    cdf = sub.add_parser('cdf', help='largest generalized singular value CDF on a grid')
    _add_param_flags(cdf)
    cdf.add_argument('--grid', help='START:STEP:STOP inside (0, 1)')
    cdf.add_argument('--form', choices=['polynomial', '2f1'], default='polynomial')
    cdf.add_argument('--max-weight', type=int, default=SeriesControl().max_weight,
                     help='series weight cap for --form 2f1 when it does not truncate')
    cdf.add_argument('--out', required=True)
    cdf.set_defaults(handler=cmd_cdf)

    verify = sub.add_parser('verify', help='KS check of sampler against analytic CDF')
    source = verify.add_mutually_exclusive_group(required=True)
    source.add_argument('--config', type=Path)
    source.add_argument('--figure', type=int, choices=sorted(FIGURE_CONFIGS))
    verify.add_argument('--out-dir')
    verify.add_argument('--num', type=int, help='override n_samples')
    verify.set_defaults(handler=cmd_verify)

    selftest = sub.add_parser('selftest', help='special-function identity suite')
    selftest.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format=LOG_FORMAT, stream=sys.stderr)
    try:
        return args.handler(args)
    except ParameterError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except NumericalError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
