use proptest::prelude::*;
use winoconv::rng::CounterRng;
use winoconv::transforms::{
    filter_transform, input_transform, mul_count, output_transform, transform_set, winograd_tile,
    Mat,
};

/// Valid `m×m` correlation of an `(m+2)²` tile with a 3×3 filter.
fn correlate(d: &Mat, g: &Mat, m: usize) -> Mat {
    let mut y = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for u in 0..3 {
                for v in 0..3 {
                    acc += d.get(i + u, j + v) * g.get(u, v);
                }
            }
            y.set(i, j, acc);
        }
    }
    y
}

fn random_mat(rng: &CounterRng, base: u64, rows: usize, cols: usize) -> Mat {
    let data = (0..rows * cols)
        .map(|i| rng.uniform_f64(base + i as u64, -1.0, 1.0))
        .collect();
    Mat::new(rows, cols, data).unwrap()
}

fn small_int_mat(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-8i32..=8, rows * cols)
        .prop_map(move |v| Mat::new(rows, cols, v.into_iter().map(f64::from).collect()).unwrap())
}

#[test]
fn identity_holds_for_ten_thousand_random_pairs() {
    for m in [2, 4] {
        let ts = transform_set(m).unwrap();
        let rng = CounterRng::new(1000 + m as u64);
        let mut worst = 0.0f64;
        for trial in 0..10_000u64 {
            let g = random_mat(&rng, trial * 64, 3, 3);
            let d = random_mat(&rng, trial * 64 + 16, ts.alpha, ts.alpha);
            let got = winograd_tile(&g, &d, &ts).unwrap();
            let want = correlate(&d, &g, m);
            let scale = want.data().iter().fold(0.0f64, |a, x| a.max(x.abs()));
            for (a, b) in got.data().iter().zip(want.data()) {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        assert!(worst <= 1e-12, "m={m}: worst relative deviation {worst:e}");
    }
}

#[test]
fn delta_filter_picks_the_centre() {
    let ts = transform_set(2).unwrap();
    let mut g = Mat::zeros(3, 3);
    g.set(1, 1, 1.0);
    let rng = CounterRng::new(3);
    let d = random_mat(&rng, 0, 4, 4);
    let y = winograd_tile(&g, &d, &ts).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((y.get(i, j) - d.get(i + 1, j + 1)).abs() < 1e-15);
        }
    }
}

#[test]
fn ones_give_nine() {
    let ts = transform_set(2).unwrap();
    let g = Mat::from_rows(&[[1.0; 3]; 3]);
    let d = Mat::from_rows(&[[1.0; 4]; 4]);
    assert_eq!(
        winograd_tile(&g, &d, &ts).unwrap(),
        Mat::from_rows(&[[9.0; 2]; 2])
    );
}

#[test]
fn multiplication_counts() {
    let (w2, d2) = mul_count(&transform_set(2).unwrap());
    let (w4, d4) = mul_count(&transform_set(4).unwrap());
    assert_eq!((w2, d2), (16, 36));
    assert_eq!((w4, d4), (36, 144));
    assert_eq!(d2 as f64 / w2 as f64, 2.25);
    assert_eq!(d4 as f64 / w4 as f64, 4.0);
}

proptest! {
    #[test]
    fn filter_transform_is_additive(g1 in small_int_mat(3, 3), g2 in small_int_mat(3, 3), m in prop::sample::select(vec![2usize, 4])) {
        let ts = transform_set(m).unwrap();
        let lhs = filter_transform(&g1.add(&g2), &ts).unwrap();
        let rhs = filter_transform(&g1, &ts).unwrap().add(&filter_transform(&g2, &ts).unwrap());
        for (a, b) in lhs.data().iter().zip(rhs.data()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn input_transform_is_additive_and_homogeneous(
        d1 in small_int_mat(6, 6),
        d2 in small_int_mat(6, 6),
        s in -4i32..=4,
    ) {
        let ts = transform_set(4).unwrap();
        let t = |d: &Mat| input_transform(d, &ts).unwrap();
        // Small integers with integer constants: exact.
        prop_assert_eq!(t(&d1.add(&d2)), t(&d1).add(&t(&d2)));
        prop_assert_eq!(t(&d1.scale(f64::from(s))), t(&d1).scale(f64::from(s)));
    }

    #[test]
    fn output_transform_is_additive_and_homogeneous(
        a in small_int_mat(4, 4),
        b in small_int_mat(4, 4),
        s in -4i32..=4,
    ) {
        let ts = transform_set(2).unwrap();
        let t = |x: &Mat| output_transform(x, &ts).unwrap();
        prop_assert_eq!(t(&a.add(&b)), t(&a).add(&t(&b)));
        prop_assert_eq!(t(&a.scale(f64::from(s))), t(&a).scale(f64::from(s)));
    }

    #[test]
    fn transposed_tile_with_symmetric_filter(
        d in small_int_mat(6, 6),
        g in small_int_mat(3, 3),
        m in prop::sample::select(vec![2usize, 4]),
    ) {
        let ts = transform_set(m).unwrap();
        let d = Mat::new(ts.alpha, ts.alpha, d.data()[..ts.alpha * ts.alpha].to_vec()).unwrap();
        let sym = g.add(&g.transpose());
        let y = winograd_tile(&sym, &d, &ts).unwrap();
        let yt = winograd_tile(&sym, &d.transpose(), &ts).unwrap();
        let want = y.transpose();
        for (a, b) in yt.data().iter().zip(want.data()) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }
}
