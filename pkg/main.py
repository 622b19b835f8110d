#!/usr/bin/env python3
"""
TAC Optimizer CLI - Simulate, optimize, sweep and appraise freight track access charges
Entry point dispatching scenario files to the simulation and appraisal pipeline
"""

import argparse
import json
import logging
import sys
import time
from typing import Any, Dict, List, Optional

import pandas as pd

from appraisal import (
    AppraisalParams, ExternalityBounds, InvestmentPlan, bcr_frame, benefit_report, npv,
)
from evaluation_framework import EvaluationFramework, kpi_frame
from optimizer import (
    GRID, PATTERN_SEARCH, BoundedProblem, GridScanConfig, OptimizeConfig, SimulationObjective,
    grid_scan, optimize_scheme,
)
from pricing import PATH_BASED, PROPORTIONAL, TIME_VARYING, TacScheme, layout_for
from results_store import (
    ResultsStore, history_frame, od_tons_frame, optimization_log_frame, packets_frame,
    throughput_frame, trace_frame,
)
from scenario_loader import load_scenario
from settings import configure_logging, load_settings
from simulator import FreightSimulator

logger = logging.getLogger(__name__)


def _read_json(path) -> Dict[str, Any]:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def _load_scheme(args, scenario) -> TacScheme:
    if getattr(args, 'scheme', None):
        return TacScheme.from_dict(_read_json(args.scheme))
    return TacScheme.proportional(args.p, scenario.bounds)


def _store(args, settings) -> ResultsStore:
    return ResultsStore(args.out or settings.output_dir)


def cmd_simulate(args, settings) -> int:
    start_time = time.time()
    scenario = load_scenario(args.scenario)
    scheme = _load_scheme(args, scenario)
    policy = scenario.policy(args.policy)

    result = FreightSimulator(scenario.network, scenario.demand, scenario.sim_config).run(scheme)
    breakdown = EvaluationFramework(scenario.network, scenario.demand).objective(result, scheme, policy)

    store = _store(args, settings)
    summary = {
        'scenario': scenario.name,
        'policy': policy.to_dict(),
        'scheme': scheme.to_dict(),
        **breakdown.to_dict(),
    }
    if args.timing:
        summary['wall_time_s'] = time.time() - start_time
    store.write_json('kpis.json', summary)
    store.write_csv('kpis.csv', kpi_frame({scenario.name: breakdown}))
    store.write_csv('trace.csv', trace_frame(result))
    store.write_csv('packets.csv', packets_frame(result))
    store.write_csv('od_tons.csv', od_tons_frame(result))
    store.write_csv('throughput.csv', throughput_frame(result))
    if not args.no_plots:
        from plotting import plot_speed_profile
        plot_speed_profile([v for _, v in result.speed_samples()], store, scenario.demand.costs.reference_speed_kmh)

    logger.info(f"✅ Simulated '{scenario.name}' under {policy.name}: Z={breakdown.Z:.2f} EUR, "
                f"{len(result.completed_packets)} trains completed")
    return 0


def cmd_optimize(args, settings) -> int:
    scenario = load_scenario(args.scenario)
    policy = scenario.policy(args.policy)
    config = OptimizeConfig(
        algo=args.algo,
        grid_steps=args.steps,
        seed_grid_steps=args.seed_steps,
        initial_mesh=args.initial_mesh,
        mesh_tolerance=args.mesh_tolerance or settings.mesh_tolerance,
        max_evaluations=args.max_evaluations or settings.max_evaluations,
        parallel_poll=(args.workers or settings.max_workers) > 1,
        max_workers=args.workers or settings.max_workers,
        intervals=args.intervals,
    )
    report = optimize_scheme(scenario, args.scheme_kind, policy, config)

    store = _store(args, settings)
    store.write_json('best_scheme.json', report.best.scheme().to_dict())
    store.write_json('optimization_report.json', report.to_dict(include_timing=args.timing))
    store.write_csv('optimization_log.csv', optimization_log_frame(report.log))
    store.write_csv('history.csv', history_frame(report.history))
    logger.info(f"✅ Best {args.scheme_kind} scheme: Z={report.best.Z:.2f} EUR")
    return 0


def cmd_sweep(args, settings) -> int:
    scenario = load_scenario(args.scenario)
    policy = scenario.policy(args.policy)
    layout = layout_for(PROPORTIONAL, (), bounds=scenario.bounds)
    objective = SimulationObjective(scenario.network, scenario.demand, scenario.sim_config, policy, layout)
    workers = args.workers or settings.max_workers
    scan = grid_scan(BoundedProblem.box(1, scenario.bounds, objective),
                     GridScanConfig(args.steps, workers > 1, workers))

    curve = pd.DataFrame(
        [
            (p, b.revenue_eur, b.externality_eur, b.Z, b.kpis['rail_share_pct'], b.kpis['completed_trains'])
            for p, _, b in scan.curve
        ],
        columns=['p', 'revenue_eur', 'externality_eur', 'Z_eur', 'rail_share_pct', 'completed_trains'],
    )
    store = _store(args, settings)
    store.write_csv('sweep.csv', curve)
    if not args.no_plots:
        from plotting import plot_sweep
        plot_sweep(curve, store)
    logger.info(f"✅ Sweep best p={scan.best_p:.4f}, Z={scan.best_Z:.2f} EUR")
    return 0


def _bounds_from_file(path: Optional[str]) -> ExternalityBounds:
    if not path:
        return ExternalityBounds()
    data = _read_json(path)
    if 'references' in data:
        return ExternalityBounds.from_references(data['references'], data.get('inflation_factor', 1.3785))
    return ExternalityBounds(**data)


def _annual_cost(args) -> Dict[str, Any]:
    if args.annual_cost is not None:
        return {'annual_cost_meur': args.annual_cost}
    data = _read_json(args.plan) if args.plan else {}
    if 'annual_cost_meur' in data:
        return {'annual_cost_meur': float(data['annual_cost_meur'])}
    kwargs = {k: data[k] for k in ('discount_rate', 'tax_recovery_factor', 'base_year') if k in data}
    if 'cash_flows' in data:
        plan = InvestmentPlan(tuple((int(y), float(a)) for y, a in data['cash_flows']), **kwargs)
    elif 'periods' in data:
        periods = [tuple(row) for row in data['periods']]
        plan = InvestmentPlan.from_periods(periods, data.get('unit_to_meur', 1.0), **kwargs)
    else:
        plan = InvestmentPlan.corridor_default(**kwargs)
    result = npv(plan, data.get('horizon_years'), data.get('method', 'average'))
    return {
        'annual_cost_meur': result.annualized_meur,
        'npv_meur': result.npv_meur,
        'horizon_years': result.horizon_years,
        'plan': plan.to_dict(),
    }


def cmd_appraise(args, settings) -> int:
    if args.kpis:
        data = _read_json(args.kpis)
        sim_kpis = data.get('kpis', data)
    elif args.scenario:
        scenario = load_scenario(args.scenario)
        scheme = _load_scheme(args, scenario)
        result = FreightSimulator(scenario.network, scenario.demand, scenario.sim_config).run(scheme)
        sim_kpis = EvaluationFramework(scenario.network, scenario.demand).objective(
            result, scheme, scenario.policy(args.policy)).kpis
    else:
        raise ValueError("appraise needs --kpis or --scenario")

    baseline = _read_json(args.baseline)
    params = AppraisalParams(**{
        k: baseline[k] for k in ('road_cost_per_tkm', 'rail_cost_per_tkm', 'tax_recovery_factor') if k in baseline
    })
    report = benefit_report(sim_kpis, baseline, _bounds_from_file(args.bounds), params)
    cost = _annual_cost(args)
    report.with_bcr(cost['annual_cost_meur'])

    store = _store(args, settings)
    store.write_json('benefit_report.json', {**report.to_dict(), 'investment': cost})
    store.write_csv('bcr.csv', bcr_frame({args.label: (report.total, cost['annual_cost_meur'])}))
    logger.info(f"✅ BCR {report.bcr.lower:.2f}% .. {report.bcr.upper:.2f}%")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='tac-optimizer',
        description='Simulation-based optimization of freight track access charges',
    )
    parser.add_argument('--log-level', default=None, help='override TAC_LOG_LEVEL')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p, scenario_required=True):
        p.add_argument('--scenario', required=scenario_required, help='scenario JSON file')
        p.add_argument('--policy', default='policy_1', help='policy_1, policy_2, policy_3 or a scenario policy')
        p.add_argument('--out', default=None, help='output directory (default TAC_OUTPUT_DIR)')
        p.add_argument('--timing', action='store_true', help='include wall-clock times in outputs')

    p = sub.add_parser('simulate', help='simulate one scheme and export KPIs and trace')
    common(p)
    p.add_argument('--scheme', help='scheme JSON file')
    p.add_argument('--p', type=float, default=0.0, help='proportional charge when no scheme file is given')
    p.add_argument('--no-plots', action='store_true')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('optimize', help='optimize a TAC scheme')
    common(p)
    p.add_argument('--scheme-kind', choices=[PROPORTIONAL, PATH_BASED, TIME_VARYING], default=PROPORTIONAL)
    p.add_argument('--algo', choices=[PATTERN_SEARCH, GRID], default=PATTERN_SEARCH)
    p.add_argument('--steps', type=int, default=26, help='grid points for --algo grid')
    p.add_argument('--seed-steps', type=int, default=26, help='grid points of the proportional seed scan')
    p.add_argument('--initial-mesh', type=float, default=0.05)
    p.add_argument('--mesh-tolerance', type=float, default=None)
    p.add_argument('--max-evaluations', type=int, default=None)
    p.add_argument('--intervals', type=int, default=4, help='time intervals for time-varying schemes')
    p.add_argument('--workers', type=int, default=None, help='parallel poll workers')
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser('sweep', help='evaluate Z over a uniform grid of proportional charges')
    common(p)
    p.add_argument('--steps', type=int, default=26)
    p.add_argument('--workers', type=int, default=None)
    p.add_argument('--no-plots', action='store_true')
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('appraise', help='benefits and benefit-cost ratio against a baseline')
    common(p, scenario_required=False)
    p.add_argument('--kpis', help='kpis.json written by simulate')
    p.add_argument('--scheme', help='scheme JSON file when simulating from --scenario')
    p.add_argument('--p', type=float, default=0.0)
    p.add_argument('--baseline', required=True, help='baseline KPI JSON (rail_tkm or rail_share_pct + total_tkm)')
    p.add_argument('--bounds', help='externality bounds JSON')
    p.add_argument('--plan', help='investment plan JSON')
    p.add_argument('--annual-cost', type=float, default=None, help='annual investment cost in MEUR')
    p.add_argument('--label', default='scenario')
    p.set_defaults(func=cmd_appraise)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return its exit status"""
    settings = load_settings()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or settings.log_level)

    try:
        return args.func(args, settings)
    except Exception as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
