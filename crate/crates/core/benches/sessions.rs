use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use qpv_core::planner::optimize_mu;
use qpv_core::protocol::{run_session, AdversaryStrategy, BooleanFunction, FunctionBackend, Role};
use qpv_core::{ChannelModel, Execution, Intensity, ProtocolParams, ScoreCoefficients, SecurityParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn params(rounds: u64) -> ProtocolParams {
    ProtocolParams {
        rounds,
        input_bits: 40,
        mu: Intensity::new(0.52).unwrap(),
        channel: ChannelModel::new(0.7, 0.003).unwrap(),
        security: SecurityParams::DEFAULT,
        rep_rate: 2e6,
    }
}

fn sessions(c: &mut Criterion) {
    let coeffs = ScoreCoefficients::PUBLISHED;
    let f = BooleanFunction::create(40, 0, FunctionBackend::Keyed).unwrap();
    let p = params(200_000);
    let mut group = c.benchmark_group("session_200k");
    group.throughput(Throughput::Elements(p.rounds));
    group.sample_size(20);
    for (role_name, role) in [
        ("honest", Role::Honest),
        ("composite", Role::Adversary(AdversaryStrategy::Composite { x: 28, det_eff: 1.0 })),
    ] {
        for (mode, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(role_name, mode), &exec, |b, &exec| {
                b.iter(|| run_session(black_box(&p), &coeffs, &role, &f, 7, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn intensity_grid(c: &mut Criterion) {
    let coeffs = ScoreCoefficients::PUBLISHED;
    let p = params(10_000_000);
    let mut group = c.benchmark_group("optimize_mu");
    for (mode, exec) in MODES {
        group.bench_function(mode, |b| {
            b.iter(|| optimize_mu(black_box(&p), &coeffs, (0.05, 2.0), 1e-4, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sessions, intensity_grid);
criterion_main!(benches);
