use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use edgecache::agent::{Agent, AgentParams, Encoder, Transition};
use edgecache::ga::{solve, solve_plain, GaParams, OffRaProblem};
use edgecache::harness::{run_episode, CachePolicy, ExperimentSpec, Phase};
use edgecache::rng::SeedStream;
use edgecache::SchemeId;
use edgecache_bench::{default_slot, leading_services};

fn ga(c: &mut Criterion) {
    let (world, inputs) = default_slot(1);
    let ctx = world.context(&inputs);
    let cache = leading_services(&world.cfg, 2);
    let problem = OffRaProblem::new(&ctx, &cache);
    let params = GaParams::default();
    c.bench_function("improved_ga_default_slot", |b| {
        b.iter(|| solve(black_box(&problem), &params, &mut SeedStream::new(2).rng()))
    });
    c.bench_function("plain_ga_default_slot", |b| {
        b.iter(|| solve_plain(black_box(&problem), &params, &mut SeedStream::new(2).rng()))
    });
    let chrom = problem.random_chromosome(&mut SeedStream::new(3).rng());
    c.bench_function("offra_fitness", |b| b.iter(|| problem.fitness(black_box(&chrom))));
}

fn agent(c: &mut Criterion) {
    let (world, _) = default_slot(1);
    let cfg = &world.cfg;
    let mut rng = SeedStream::new(4).rng();
    let width = cfg.state_width();
    let state = |r: f64| vec![vec![r; width]; cfg.small_slots];
    let batch: Vec<Transition> = (0..32)
        .map(|i| Transition {
            state: state(i as f64 / 32.0),
            action: vec![0.0; cfg.action_width()],
            reward: i as f64,
            next_state: state(0.5),
        })
        .collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let seq = state(0.25);
    for (name, encoder) in [("lstm", Encoder::Lstm), ("last_state", Encoder::LastState)] {
        let mut agent = Agent::new(cfg, AgentParams::default(), encoder, &mut rng).unwrap();
        c.bench_function(&format!("actor_forward_{name}"), |b| b.iter(|| agent.scores(black_box(&seq)).unwrap()));
        c.bench_function(&format!("train_step_{name}"), |b| b.iter(|| agent.train_step(black_box(&refs)).unwrap()));
    }
}

fn episode(c: &mut Criterion) {
    let (world, _) = default_slot(1);
    let spec = ExperimentSpec::default();
    let stream = SeedStream::new(5);
    let mut group = c.benchmark_group("episode");
    group.sample_size(10);
    for scheme in [SchemeId::DglDdpg, SchemeId::GaAll] {
        let mut policy = CachePolicy::new(scheme, &spec, &world.cfg, stream).unwrap();
        group.bench_function(scheme.name(), |b| {
            b.iter(|| run_episode(&world, scheme, &mut policy, &spec.ga, Phase::Train, 0, stream).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ga, agent, episode);
criterion_main!(benches);
