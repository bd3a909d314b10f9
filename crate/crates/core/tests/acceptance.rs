//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! hard criterion fails. The wall-clock criterion (4) is reported but never
//! fails the run: its outcome depends on the host.

use std::time::{Duration, Instant};

use winoconv::rng::CounterRng;
use winoconv::scheduler::{simulate_heterogeneous, WorkerProfile};
use winoconv::transforms::{mul_count, transform_set, winograd_tile, Mat};
use winoconv::{
    direct_conv, im2col_conv_with, make_tensor, plan, tolerance, transform_filters,
    verification_error, winograd_conv, winograd_conv_instrumented, Accumulate, ConvSpec, DType,
    Execution, Fill, Layout, Policy, Shape, Tensor, DEFAULT_L1_BUDGET,
};

enum Outcome {
    Pass(String),
    Fail(String),
    /// Soft criterion that missed its target.
    Warn(String),
}

/// The five reference layers: (IC, OC, H=W) with padding 1, N = 1.
const LAYERS: [(usize, usize, usize, f64); 5] = [
    (640, 640, 32, 2.76),
    (1280, 1280, 16, 2.27),
    (2560, 1280, 16, 2.20),
    (320, 320, 64, 2.09),
    (640, 320, 64, 2.07),
];

fn random(shape: Shape, seed: u64) -> Tensor {
    make_tensor(
        shape,
        Layout::ChannelMajor,
        DType::F32,
        Fill::SeededUniform {
            seed,
            lo: -1.0,
            hi: 1.0,
        },
    )
    .unwrap()
}

fn random_case(rng: &CounterRng, i: u64) -> (ConvSpec, Shape) {
    let c = i * 8;
    let n = rng.range_usize(c, 1, 2);
    let ic = rng.range_usize(c + 1, 1, 32);
    let oc = rng.range_usize(c + 2, 1, 32);
    let padding = rng.range_usize(c + 3, 0, 2);
    let min = 3usize.saturating_sub(2 * padding).max(1);
    let h = rng.range_usize(c + 4, min, 24);
    let w = rng.range_usize(c + 5, min, 24);
    (ConvSpec::conv3x3(ic, oc, padding), Shape::new(n, ic, h, w))
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort_unstable();
    v[v.len() / 2]
}

fn transform_identity() -> Outcome {
    let mut worst = [0.0f64; 2];
    for (slot, m) in [2usize, 4].into_iter().enumerate() {
        let ts = transform_set(m).unwrap();
        let rng = CounterRng::new(31 + m as u64);
        for trial in 0..10_000u64 {
            let mat = |base: u64, n: usize| {
                Mat::new(
                    n,
                    n,
                    (0..n * n)
                        .map(|i| rng.uniform_f64(base + i as u64, -1.0, 1.0))
                        .collect(),
                )
                .unwrap()
            };
            let g = mat(trial * 64, 3);
            let d = mat(trial * 64 + 16, ts.alpha);
            let y = winograd_tile(&g, &d, &ts).unwrap();
            let mut scale = 0.0f64;
            let mut want = vec![0.0; m * m];
            for i in 0..m {
                for j in 0..m {
                    let mut acc = 0.0;
                    for u in 0..3 {
                        for v in 0..3 {
                            acc += d.get(i + u, j + v) * g.get(u, v);
                        }
                    }
                    want[i * m + j] = acc;
                    scale = scale.max(acc.abs());
                }
            }
            for (a, b) in y.data().iter().zip(&want) {
                worst[slot] = worst[slot].max((a - b).abs() / scale);
            }
        }
    }
    let msg = format!(
        "10^4 pairs per m, worst relative deviation m=2 {:.1e}, m=4 {:.1e}",
        worst[0], worst[1]
    );
    if worst.iter().all(|&w| w <= 1e-12) {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn oracle_equivalence() -> Outcome {
    let mut worst = [0.0f64; 2];
    let mut check = |x: &Tensor, f: &Tensor, spec: &ConvSpec| {
        let want = direct_conv(x, f, spec, Accumulate::F64).unwrap();
        for (slot, m) in [2usize, 4].into_iter().enumerate() {
            let p = plan(spec, x.shape(), m, DEFAULT_L1_BUDGET).unwrap();
            let got = winograd_conv(x, f, &p, Execution::sequential()).unwrap();
            worst[slot] = worst[slot].max(verification_error(&got, &want).unwrap());
        }
    };
    for &(ic, oc, hw, _) in &LAYERS {
        let spec = ConvSpec::conv3x3(ic, oc, 1);
        check(
            &random(Shape::new(1, ic, hw, hw), 42),
            &random(spec.filter_shape(), 43),
            &spec,
        );
    }
    let rng = CounterRng::new(2718);
    for i in 0..50 {
        let (spec, shape) = random_case(&rng, i);
        check(
            &random(shape, 100 + i),
            &random(spec.filter_shape(), 200 + i),
            &spec,
        );
    }
    let msg = format!(
        "5 reference layers + 50 random shapes, worst error m=2 {:.2e} (tol {:.0e}), m=4 {:.2e} (tol {:.0e})",
        worst[0],
        tolerance(2),
        worst[1],
        tolerance(4)
    );
    if worst[0] <= tolerance(2) && worst[1] <= tolerance(4) {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn multiplication_counts() -> Outcome {
    let (w2, d2) = mul_count(&transform_set(2).unwrap());
    let (w4, d4) = mul_count(&transform_set(4).unwrap());
    let mut ok = (w2, d2, w4, d4) == (16, 36, 36, 144);
    let spec = ConvSpec::conv3x3(4, 4, 1);
    let x = random(Shape::new(1, 4, 8, 8), 1);
    let f = random(spec.filter_shape(), 2);
    let mut counted = Vec::new();
    for (m, per_tile) in [(2, w2), (4, w4)] {
        let p = plan(&spec, x.shape(), m, DEFAULT_L1_BUDGET).unwrap();
        let (_, inst) = winograd_conv_instrumented(&x, &f, &p, Execution::sequential()).unwrap();
        let expected = (p.tiles() * per_tile * 4 * 4) as u64;
        ok &= inst.multiplications == expected;
        counted.push(inst.multiplications);
    }
    // Direct: 64 outputs × 4 OC × 4 IC × 9 taps.
    let direct = 64 * 16 * 9;
    let msg = format!(
        "per-tile ratios {}/{} = {}, {}/{} = {}; (1,4,8,8)/OC=4 counted {} (m=2) and {} (m=4) vs direct {}",
        d2,
        w2,
        d2 as f64 / w2 as f64,
        d4,
        w4,
        d4 as f64 / w4 as f64,
        counted[0],
        counted[1],
        direct
    );
    ok &= counted == [4096, 2304];
    if ok {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn wall_clock_speedup() -> Outcome {
    let (ic, oc, hw, reference) = LAYERS[0];
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let spec = ConvSpec::conv3x3(ic, oc, 1);
    let x = random(Shape::new(1, ic, hw, hw), 42);
    let f = random(spec.filter_shape(), 43);
    let p = plan(&spec, x.shape(), 4, DEFAULT_L1_BUDGET).unwrap();
    let bank = transform_filters(&f, &p).unwrap();
    let exec = Execution::new(workers, Policy::Dynamic);
    let time = |run: &dyn Fn()| {
        run();
        median(
            (0..5)
                .map(|_| {
                    let t = Instant::now();
                    run();
                    t.elapsed()
                })
                .collect(),
        )
    };
    let wino = time(&|| {
        std::hint::black_box(winograd_conv(&x, &bank, &p, exec).unwrap());
    });
    let base = time(&|| {
        std::hint::black_box(im2col_conv_with(&x, &f, &spec, workers, Policy::Static).unwrap());
    });
    let speedup = base.as_secs_f64() / wino.as_secs_f64();
    let msg = format!(
        "[3,3,640,640] on 32x32, m=4, {workers} worker(s): im2col {:.1} ms / winograd {:.1} ms = {speedup:.2}x \
         (target 1.5x; published reference {reference}x on other hardware)",
        base.as_secs_f64() * 1e3,
        wino.as_secs_f64() * 1e3
    );
    if speedup >= 1.5 {
        Outcome::Pass(msg)
    } else {
        Outcome::Warn(msg)
    }
}

fn scheduler_advantage() -> Outcome {
    let unit = Duration::from_millis(4);
    let ratio = |slowdowns: &[f64]| {
        let profiles = WorkerProfile::from_slowdowns(slowdowns);
        let (mut d, mut s) = (Duration::ZERO, Duration::ZERO);
        for _ in 0..5 {
            d += simulate_heterogeneous(64, unit, &profiles, Policy::Dynamic);
            s += simulate_heterogeneous(64, unit, &profiles, Policy::Static);
        }
        d.as_secs_f64() / s.as_secs_f64()
    };
    let hetero = ratio(&[1.0, 1.0, 1.0, 2.0]);
    let homo = ratio(&[1.0; 4]);
    let msg = format!("dynamic/static makespan: {{1,1,1,2}} {hetero:.3} (<= 0.85), homogeneous {homo:.3} (in [0.9, 1.1])");
    if hetero <= 0.85 && (0.9..=1.1).contains(&homo) {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn exactly_once() -> Outcome {
    let cases = [
        (ConvSpec::conv3x3(3, 5, 1), Shape::new(1, 3, 7, 5)),
        (ConvSpec::conv3x3(2, 9, 0), Shape::new(2, 2, 9, 12)),
        (ConvSpec::conv3x3(4, 70, 1), Shape::new(1, 4, 13, 11)),
        (ConvSpec::conv3x3(1, 1, 2), Shape::new(1, 1, 1, 1)),
    ];
    let mut runs = 0;
    for (spec, shape) in cases {
        let x = random(shape, 5);
        let f = random(spec.filter_shape(), 6);
        for m in [2, 4] {
            let p = plan(&spec, shape, m, 2048).unwrap();
            for exec in [
                Execution::sequential(),
                Execution::new(4, Policy::Dynamic),
                Execution::new(4, Policy::Static),
            ] {
                let (_, inst) = winograd_conv_instrumented(&x, &f, &p, exec).unwrap();
                if inst.write_counts.len() != p.output_shape().len()
                    || inst.write_counts.iter().any(|&c| c != 1)
                {
                    return Outcome::Fail(format!(
                        "{shape:?} m={m} {exec:?}: some output not written exactly once"
                    ));
                }
                runs += 1;
            }
        }
    }
    Outcome::Pass(format!(
        "{runs} instrumented runs over overhang shapes, every write count is 1"
    ))
}

fn determinism() -> Outcome {
    let rng = CounterRng::new(99);
    for i in 0..10 {
        let (spec, shape) = random_case(&rng, i);
        let x = random(shape, i);
        let f = random(spec.filter_shape(), i + 50);
        for m in [2, 4] {
            let p = plan(&spec, shape, m, 4096).unwrap();
            let base = winograd_conv(&x, &f, &p, Execution::sequential()).unwrap();
            for workers in [1, 2, 8] {
                for policy in [Policy::Dynamic, Policy::Static] {
                    if winograd_conv(&x, &f, &p, Execution::new(workers, policy)).unwrap() != base {
                        return Outcome::Fail(format!(
                            "shape {i} m={m}: {workers} workers {policy} differs"
                        ));
                    }
                }
            }
        }
    }
    Outcome::Pass(
        "10 random shapes x m in {2,4} x workers {1,2,8} x {dynamic,static}: bitwise identical"
            .into(),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("transform identity", transform_identity),
        ("oracle equivalence", oracle_equivalence),
        ("multiplication count", multiplication_counts),
        ("wall-clock speedup (soft)", wall_clock_speedup),
        ("scheduler advantage", scheduler_advantage),
        ("exactly-once coverage", exactly_once),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, msg) = match outcome {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Warn(m) => ("SOFT-FAIL", m),
            Outcome::Fail(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {}: {tag} {name}: {msg} [{secs:.1} s]", i + 1);
    }
    println!(
        "criterion 8: OUT OF SCOPE end-to-end image-generation latencies: they need a full diffusion pipeline \
         and specific hardware; criteria 1-7 stand in for them"
    );
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
