use edgecache::baselines::{ga_all, popular_cache, random_cache, RequestStats};
use edgecache::env::{
    structural_violations, switching_cost, CacheDecision, ServiceCatalog, SlotContext, Target, Task, Topology,
};
use edgecache::ga::{GaParams, VIOLATION_FITNESS};
use edgecache::harness::{solve_offra, Phase, World};
use edgecache::rng::SeedStream;
use edgecache::units::gb_to_bits;
use edgecache::{SchemeId, SystemConfig};
use rand::Rng;

fn default_world(seed: u64) -> World {
    World::new(SystemConfig::default(), SeedStream::new(seed), 0)
}

#[test]
fn every_off_ra_rule_is_structurally_feasible() {
    for seed in 0..3 {
        let world = default_world(seed);
        let episode = world.episode(Phase::Train, 0);
        for small in 0..3 {
            let inputs = world.slot_inputs(&episode, 0, small);
            let ctx = world.context(&inputs);
            let mut rng = SeedStream::new(seed * 10 + small as u64).rng();
            let cache = random_cache(&world.catalog, &world.cfg, &mut rng);
            for scheme in SchemeId::ALL {
                let stream = SeedStream::new(seed).derive(&[scheme.tag(), small as u64]);
                let (decision, _) = solve_offra(scheme.offra_rule(), &ctx, &cache, &GaParams::default(), stream)
                    .unwrap_or_else(|e| panic!("{scheme}: {e}"));
                let v = structural_violations(&ctx, &cache, &decision);
                assert!(v.is_empty(), "{scheme} violates {v:?}");
            }
        }
    }
}

#[test]
fn cache_baselines_respect_capacity() {
    let world = default_world(4);
    let episode = world.episode(Phase::Train, 0);
    let mut stats = RequestStats::new(world.cfg.num_es, world.cfg.num_services);
    for small in 0..world.cfg.small_slots {
        let inputs = world.slot_inputs(&episode, 0, small);
        stats.record(&world.context(&inputs));
    }
    let popular = popular_cache(&stats, &world.catalog, &world.cfg);
    assert!(popular.fits(&world.catalog, world.cfg.es_cache_bits));
    // the most requested service of each ES is cached when it fits on its own
    for m in 0..world.cfg.num_es {
        let row = stats.row(m);
        let top = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a))).unwrap();
        if row[top] > 0.0 && world.catalog.cache_bits[top] <= world.cfg.es_cache_bits {
            assert!(popular.get(m, top), "ES {m} misses its top service {top}");
        }
    }
    for seed in 0..20 {
        let cache = random_cache(&world.catalog, &world.cfg, &mut SeedStream::new(seed).rng());
        assert!(cache.fits(&world.catalog, world.cfg.es_cache_bits));
    }
}

#[test]
fn joint_ga_is_feasible_and_respects_capacity() {
    let world = default_world(5);
    let episode = world.episode(Phase::Eval, 0);
    let inputs = world.slot_inputs(&episode, 0, 0);
    let ctx = world.context(&inputs);
    let prev = CacheDecision::empty(world.cfg.num_es, world.cfg.num_services);
    let res = ga_all(&ctx, &prev, &GaParams::default(), &mut SeedStream::new(1).rng());
    assert!(res.cache.fits(&world.catalog, world.cfg.es_cache_bits));
    assert!(structural_violations(&ctx, &res.cache, &res.decision).is_empty());
    assert!(res.trace.windows(2).all(|w| w[1] >= w[0]));
}

struct Tiny {
    cfg: SystemConfig,
    catalog: ServiceCatalog,
    topo: Topology,
    tasks: Vec<Task>,
    gains: Vec<f64>,
}

fn tiny(seed: u64) -> Tiny {
    let mut rng = SeedStream::new(seed).rng();
    let cfg = SystemConfig {
        num_es: 2,
        num_tds: 2,
        num_services: 2,
        es_cache_bits: gb_to_bits(6.0),
        ..SystemConfig::default()
    };
    let catalog = ServiceCatalog {
        cache_bits: vec![gb_to_bits(rng.random_range(1.0..5.0)), gb_to_bits(rng.random_range(1.0..5.0))],
        density: (0..2).map(|_| rng.random_range(400.0..1000.0)).collect(),
        input_min_bits: cfg.input_min_bits,
        input_max_bits: cfg.input_max_bits,
    };
    let mut pos = || [rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)];
    let topo = Topology::from_positions(vec![pos(), pos()], vec![pos(), pos()]);
    let tasks = (0..2)
        .map(|_| {
            let f = rng.random_range(0..2);
            Task::new(f, rng.random_range(cfg.input_min_bits..cfg.input_max_bits), &catalog)
        })
        .collect();
    let gains = (0..2)
        .map(|n| rng.random_range(0.3..2.0) * topo.uplink_distance(n).powf(-cfg.path_loss_exp))
        .collect();
    Tiny {
        cfg,
        catalog,
        topo,
        tasks,
        gains,
    }
}

/// Best threshold-respecting QoS sum on an 11-point share grid.
fn best_offra(ctx: &SlotContext<'_>, cache: &CacheDecision, cooperative: bool) -> f64 {
    let grid: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let cfg = ctx.cfg;
    let targets = |n: usize| -> Vec<Target> {
        let mut t = vec![Target::Local, Target::Cloud];
        for m in 0..cfg.num_es {
            if cache.get(m, ctx.tasks[n].service) && (cooperative || m == ctx.assoc(n)) {
                t.push(Target::Edge(m));
            }
        }
        t
    };
    let shares = |t: Target| -> (Vec<f64>, Vec<f64>) {
        match t {
            Target::Local => (vec![0.0], vec![0.0]),
            Target::Cloud => (vec![0.0], grid.clone()),
            Target::Edge(_) => (grid.clone(), grid.clone()),
        }
    };
    let mut best = VIOLATION_FITNESS;
    for t0 in targets(0) {
        for t1 in targets(1) {
            let (f0s, b0s) = shares(t0);
            let (f1s, b1s) = shares(t1);
            let shared_es = matches!((t0, t1), (Target::Edge(a), Target::Edge(b)) if a == b);
            let shared_cell = t0.is_offloaded() && t1.is_offloaded() && ctx.assoc(0) == ctx.assoc(1);
            for &f0 in &f0s {
                for &f1 in &f1s {
                    if shared_es && f0 + f1 > 1.0 + 1e-9 {
                        continue;
                    }
                    for &b0 in &b0s {
                        for &b1 in &b1s {
                            if shared_cell && b0 + b1 > 1.0 + 1e-9 {
                                continue;
                            }
                            let parts = [ctx.delay_energy(0, t0, f0, b0), ctx.delay_energy(1, t1, f1, b1)];
                            if parts
                                .iter()
                                .all(|&(d, e)| d <= cfg.delay_threshold_s && e <= cfg.energy_threshold_j)
                            {
                                let q: f64 = parts.iter().map(|&(d, e)| edgecache::env::qos(cfg, d, e)).sum();
                                best = best.max(q);
                            }
                        }
                    }
                }
            }
        }
    }
    best
}

fn placements(t: &Tiny) -> Vec<CacheDecision> {
    (0..16u32)
        .map(|mask| CacheDecision::from_bits(2, 2, (0..4).map(|b| mask >> b & 1 == 1).collect()))
        .filter(|c| c.fits(&t.catalog, t.cfg.es_cache_bits))
        .collect()
}

#[test]
fn cooperation_never_lowers_the_optimum() {
    for seed in 0..20 {
        let t = tiny(seed);
        let ctx = SlotContext::new(&t.cfg, &t.catalog, &t.topo, &t.tasks, &t.gains);
        for cache in placements(&t) {
            let coop = best_offra(&ctx, &cache, true);
            let alone = best_offra(&ctx, &cache, false);
            assert!(alone <= coop + 1e-12, "seed {seed}: {alone} > {coop}");
        }
    }
}

#[test]
fn joint_ga_is_near_the_exhaustive_slot_optimum() {
    let mut near = 0;
    let trials = 20;
    for seed in 0..trials {
        let t = tiny(100 + seed);
        let ctx = SlotContext::new(&t.cfg, &t.catalog, &t.topo, &t.tasks, &t.gains);
        let prev = CacheDecision::empty(2, 2);
        let best = placements(&t)
            .iter()
            .map(|c| {
                let cost = switching_cost(&prev, c, &t.catalog, t.cfg.backhaul_bps);
                let q = best_offra(&ctx, c, true);
                if q > VIOLATION_FITNESS {
                    (q - t.cfg.cost_balance * cost).max(VIOLATION_FITNESS)
                } else {
                    VIOLATION_FITNESS
                }
            })
            .fold(VIOLATION_FITNESS, f64::max);
        let ga = ga_all(&ctx, &prev, &GaParams::default(), &mut SeedStream::new(seed).rng());
        if ga.fitness >= 0.9 * best {
            near += 1;
        }
    }
    assert!(near >= trials - 1, "joint GA within 10% on only {near}/{trials}");
}
