use maxinfo::linalg::{log_rect_vol, rect_vol, Matrix};
use maxinfo::maxvol::{maxvol_square, rect_maxvol, MaxVolParams, StopReason};
use maxinfo::metrics::uniform_sample;
use maxinfo::{synth, Error};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

fn m(rows: &[&[f64]]) -> Matrix {
    Matrix::from_rows(rows).unwrap()
}

fn random(n: usize, s: usize, seed: u64) -> Matrix {
    let mut rng = synth::rng(seed);
    Matrix::new(n, s, (0..n * s).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn square_matches_brute_force_over_pairs() {
    let q = m(&[&[1.0, 0.0], &[0.0, 1.0], &[10.0, 10.0]]);
    let sq = maxvol_square(&q, 100).unwrap();
    let best = [[0, 1], [0, 2], [1, 2]]
        .iter()
        .map(|p| rect_vol(&q.select_rows(p)).unwrap())
        .fold(0.0f64, f64::max);
    assert!((best - 10.0).abs() < 1e-12);
    assert!((sq.log_abs_det.exp() - best).abs() < 1e-9);
}

#[test]
fn square_on_identity_takes_all_rows() {
    let sq = maxvol_square(&Matrix::identity(4), 100).unwrap();
    let mut p = sq.pivots.clone();
    p.sort();
    assert_eq!(p, vec![0, 1, 2, 3]);
    assert!(sq.log_abs_det.abs() < 1e-12);
}

#[test]
fn identity_plus_diagonal_row() {
    let q = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
    let st = rect_maxvol(&q, &MaxVolParams::new(1.0, 1, 3)).unwrap();
    assert_eq!(st.len(), 3);
    assert!((st.log_volume().exp() - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn two_blocks_of_duplicates() {
    let u = [1.0, 0.0, 0.0];
    let v = [0.0, 0.6, 0.8];
    let rows: Vec<&[f64]> = (0..8).map(|i| if i < 4 { &u[..] } else { &v[..] }).collect();
    let st = rect_maxvol(&m(&rows), &MaxVolParams::new(1.05, 1, 8)).unwrap();
    let p = st.sorted_pivots();
    assert_eq!(p.len(), 2);
    assert!(p[0] < 4 && p[1] >= 4);
    assert_eq!(st.stop_reason(), Some(StopReason::Tolerance));
}

#[test]
fn seeded_12x3_beats_uniform_and_median() {
    let q = random(12, 3, 12);
    let st = rect_maxvol(&q, &MaxVolParams::new(0.0, 6, 6)).unwrap();
    let greedy = rect_vol(&q.select_rows(&st.sorted_pivots())).unwrap();
    assert!(greedy >= rect_vol(&q.select_rows(&uniform_sample(12, 6).unwrap())).unwrap());
    let mut rng = synth::rng(13);
    let mut vols: Vec<f64> = (0..1000)
        .map(|_| rect_vol(&q.select_rows(&sample(&mut rng, 12, 6).into_vec())).unwrap())
        .collect();
    vols.sort_by(f64::total_cmp);
    assert!(greedy >= vols[500]);
}

#[test]
fn append_duplicate_and_zero_rows() {
    let q = m(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 0.0]]);
    let mut st = rect_maxvol(&q, &MaxVolParams::new(10.0, 1, 4)).unwrap();
    assert_eq!(st.len(), 2);
    let v0 = st.log_volume();
    let dup = st.append_row(2).unwrap();
    assert!((dup - 1.0).abs() < 1e-12);
    assert!((st.log_volume() - v0 - 0.5 * 2f64.ln()).abs() < 1e-12);
    let v1 = st.log_volume();
    assert!(st.append_row(3).unwrap().abs() < 1e-12);
    assert!((st.log_volume() - v1).abs() < 1e-12);
    assert!(matches!(st.append_row(3), Err(Error::InvalidPivot { index: 3, .. })));
    assert!(matches!(st.append_row(9), Err(Error::InvalidPivot { .. })));
}

#[test]
fn five_random_appends_track_direct_volume() {
    let q = random(10, 3, 5);
    let mut st = rect_maxvol(&q, &MaxVolParams::new(100.0, 1, 10)).unwrap();
    assert_eq!(st.len(), 3);
    let mut rng = synth::rng(6);
    for _ in 0..5 {
        let free: Vec<usize> = (0..10).filter(|&i| !st.is_selected(i)).collect();
        st.append_row(free[rng.random_range(0..free.len())]).unwrap();
        let direct = log_rect_vol(&q.select_rows(st.pivots())).unwrap();
        assert!((st.log_volume() - direct).abs() < 1e-8);
    }
}

fn instance() -> impl Strategy<Value = (Matrix, f64, usize, usize)> {
    (2usize..=24, 1usize..=6, any::<u64>(), 0.0f64..2.0).prop_flat_map(|(n, s, seed, tol)| {
        let s = s.min(n);
        (Just(random(n, s, seed)), Just(tol), 1..=n, s..=n).prop_map(|(q, tol, lo, hi)| (q, tol, lo.min(hi), hi))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn greedy_argmax_termination_monotone((q, tol, lo, hi) in instance()) {
        let params = MaxVolParams::new(tol, lo, hi);
        let st = rect_maxvol(&q, &params).unwrap();
        // replay: each append is the best candidate of the state before it
        let r = st.square_pivots().len();
        let mut replay = rect_maxvol(&q, &MaxVolParams::new(f64::MAX, 1, r.max(1))).unwrap();
        prop_assert_eq!(replay.pivots(), st.square_pivots());
        let mut prev = st.initial_log_volume();
        for step in st.steps() {
            let (best, norm) = replay.best_candidate().unwrap();
            prop_assert_eq!(best, step.index);
            prop_assert!((norm - step.coeff_norm).abs() < 1e-12);
            replay.append_row(best).unwrap();
            prop_assert!(step.log_volume >= prev - 1e-12);
            prev = step.log_volume;
        }
        prop_assert!(st.len() <= hi);
        prop_assert!(st.len() >= lo.min(q.rows()));
        match st.stop_reason().unwrap() {
            StopReason::MaxRows => prop_assert_eq!(st.len(), hi),
            StopReason::Tolerance => {
                prop_assert!(st.len() >= lo);
                prop_assert!(st.best_candidate().unwrap().1 <= tol);
            }
            StopReason::Exhausted => prop_assert_eq!(st.len(), q.rows()),
        }
    }

    #[test]
    fn permutation_equivariance((q, tol, lo, hi) in instance(), seed in any::<u64>()) {
        let n = q.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut synth::rng(seed));
        let params = MaxVolParams::new(tol, lo, hi);
        let a = rect_maxvol(&q, &params).unwrap();
        let b = rect_maxvol(&q.select_rows(&perm), &params).unwrap();
        let mut mapped: Vec<usize> = b.pivots().iter().map(|&i| perm[i]).collect();
        mapped.sort();
        prop_assert_eq!(mapped, a.sorted_pivots());
    }

    #[test]
    fn square_dominance_holds(seed in any::<u64>(), n in 3usize..=16, r in 1usize..=3) {
        let q = random(n, r, seed);
        let sq = maxvol_square(&q, 100).unwrap();
        prop_assert!(sq.converged);
        prop_assert!(sq.coeff.max_abs() <= 1.0 + 1e-9);
    }
}
