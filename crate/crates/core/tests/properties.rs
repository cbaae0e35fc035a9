use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_rank::lattice::{freq_vector, hnf, solutions};
use sparse_rank::linalg::{frozen, kernel, rank, rho, Echelon};
use sparse_rank::matgen::{add_ternary_rows, gen_pairing, gen_simple, sample_degrees};
use sparse_rank::threshold::{phi, phi_max};
use sparse_rank::{DegreeDist, FieldCtx, FieldElem, ModelSpec, SparseMatrix};
use std::sync::Arc;

const ORDERS: [u32; 12] = [2, 3, 4, 5, 7, 8, 9, 16, 25, 27, 32, 49];

fn field() -> impl Strategy<Value = Arc<FieldCtx>> {
    prop::sample::select(ORDERS.to_vec()).prop_map(|q| Arc::new(FieldCtx::new(q).unwrap()))
}

fn small_matrix() -> impl Strategy<Value = SparseMatrix> {
    (prop::sample::select(vec![2u32, 3, 4, 5]), 1usize..14, 0usize..14).prop_flat_map(|(q, n, m)| {
        prop::collection::vec(prop::collection::vec((0..n, 0..q as u16), 0..5), m).prop_map(move |rows| {
            let f = Arc::new(FieldCtx::new(q).unwrap());
            let rows = rows.into_iter().map(|r| r.into_iter().map(|(j, v)| (j, FieldElem(v))).collect()).collect();
            SparseMatrix::from_rows(f, n, rows).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn field_axioms(f in field(), a in any::<u16>(), b in any::<u16>(), c in any::<u16>()) {
        let q = f.q() as u16;
        let (a, b, c) = (FieldElem(a % q), FieldElem(b % q), FieldElem(c % q));
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        prop_assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), FieldElem::ZERO);
        prop_assert_eq!(f.mul(a, b), f.mul_schoolbook(a, b));
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElem::ONE);
        }
    }

    #[test]
    fn index_is_length_decreasing(f in field()) {
        let units = f.units_by_index();
        prop_assert_eq!(units.len(), f.q() as usize - 1);
        for (i, &u) in units.iter().enumerate() {
            prop_assert_eq!(f.index_f(u), Some(i + 1));
        }
        prop_assert!(units.windows(2).all(|w| f.element_len(w[0]) >= f.element_len(w[1])));
        let (p, ell, q) = (f.p() as usize, f.ell() as usize, f.q() as usize);
        for i in 0..ell {
            for a in 1..p {
                let mut c = vec![0u32; ell];
                c[i] = a as u32;
                let h = f.from_coeffs(&c).unwrap();
                prop_assert_eq!(f.index_f(h), Some(q - 1 - (ell - i) * (p - 1) + a));
            }
        }
    }

    #[test]
    fn rank_bounds_and_kernel(a in small_matrix(), seed in any::<u64>()) {
        let r = rank(&a).unwrap();
        prop_assert!(r <= a.nrows().min(a.ncols()));
        let k = kernel(&a).unwrap();
        prop_assert_eq!(k.nullity, a.ncols() - r);
        let f = a.field().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = k.sample(&f, a.ncols(), &mut rng);
        prop_assert!(a.mul_vec(&x).unwrap().iter().all(|v| v.is_zero()));
        for t in f.units() {
            let tx: Vec<FieldElem> = x.iter().map(|&v| f.mul(t, v)).collect();
            prop_assert!(a.mul_vec(&tx).unwrap().iter().all(|v| v.is_zero()));
        }
        prop_assert_eq!(k, kernel(&a).unwrap());
    }

    #[test]
    fn extra_rows_step_rank_and_grow_frozen(a in small_matrix(), extra in prop::collection::vec((0usize..14, 1u16..5), 1..4)) {
        let f = a.field().clone();
        let q = f.q() as u16;
        let mut b = a.clone();
        b.push_row(extra.into_iter().map(|(j, v)| (j % a.ncols(), FieldElem(v % q))).collect()).unwrap();
        let (ra, rb) = (rank(&a).unwrap(), rank(&b).unwrap());
        prop_assert!(rb == ra || rb == ra + 1);
        let fa = frozen(&a).unwrap();
        let fb = frozen(&b).unwrap();
        prop_assert!(fa.iter().all(|i| fb.contains(i)));
    }

    #[test]
    fn echelon_incremental_matches_batch(a in small_matrix()) {
        let mut e = Echelon::new(a.field().clone(), a.ncols()).unwrap();
        let mut r = 0;
        for row in a.rows() {
            if e.insert_sparse(row) {
                r += 1;
            }
        }
        prop_assert_eq!(r, rank(&a).unwrap());
    }

    #[test]
    fn rho_totals(f in field(), vals in prop::collection::vec((any::<u16>(), 1u32..9), 1..30)) {
        let q = f.q() as u16;
        let sigma: Vec<FieldElem> = vals.iter().map(|v| FieldElem(v.0 % q)).collect();
        let d: Vec<u32> = vals.iter().map(|v| v.1).collect();
        let r = rho(&f, &sigma, &d).unwrap();
        prop_assert_eq!(r.iter().sum::<u64>(), d.iter().map(|&x| x as u64).sum::<u64>());
        let scaled: Vec<u32> = d.iter().map(|&x| 5 * x).collect();
        prop_assert!(rho(&f, &sigma, &scaled).unwrap().iter().all(|&x| x % 5 == 0));
    }

    #[test]
    fn solution_counts(q in prop::sample::select(vec![2u32, 3, 4, 5, 7]), raw in prop::collection::vec(1u16..7, 3..5)) {
        let f = FieldCtx::new(q).unwrap();
        let coeffs: Vec<FieldElem> = raw.iter().map(|&c| FieldElem(1 + (c - 1) % (q as u16 - 1))).collect();
        let s = solutions(&f, &coeffs).unwrap();
        prop_assert_eq!(s.sols.len(), (q as usize).pow(coeffs.len() as u32 - 1));
        prop_assert!(s.sols.iter().any(|t| t.iter().all(|x| x.is_zero())));
        for t in &s.sols {
            let v = freq_vector(&f, t);
            prop_assert_eq!(v.iter().sum::<i64>() as usize, t.iter().filter(|x| !x.is_zero()).count());
        }
    }

    #[test]
    fn hnf_ignores_generator_order(cols in prop::collection::vec(prop::collection::vec(-6i64..7, 3), 1..6), mult in -3i64..4) {
        let h = hnf(&cols, 3);
        let mut shuffled: Vec<Vec<i64>> = cols.iter().rev().cloned().collect();
        let combo: Vec<i64> = cols[0].iter().zip(cols.last().unwrap()).map(|(a, b)| a + mult * b).collect();
        shuffled.push(combo.clone());
        prop_assert_eq!(&h, &hnf(&shuffled, 3));
        prop_assert!(h.contains(&combo));
        for c in &cols {
            prop_assert!(h.contains(c));
        }
    }

    #[test]
    fn generated_degrees_match(seed in any::<u64>(), mean in 1.0f64..2.6, q in prop::sample::select(vec![2u32, 3, 4])) {
        let spec = ModelSpec::new(DegreeDist::poisson(mean, 1e-12).unwrap(), DegreeDist::fixed(3), q, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degs = sample_degrees(&spec, 150, &mut rng, 100_000).unwrap();
        prop_assert_eq!(degs.dvec.iter().map(|&x| x as u64).sum::<u64>(), degs.kvec.iter().map(|&x| x as u64).sum::<u64>());
        let a = gen_simple(&spec, &degs, &mut rng, 100_000).unwrap();
        prop_assert_eq!(a.row_support_sizes(), degs.kvec.iter().map(|&k| k as usize).collect::<Vec<_>>());
        prop_assert_eq!(a.col_support_sizes(), degs.dvec.iter().map(|&d| d as usize).collect::<Vec<_>>());
        let p = gen_pairing(&spec, &degs, &mut rng);
        prop_assert_eq!(p.nrows(), degs.m());
        prop_assert!(p.row_support_sizes().iter().zip(&degs.kvec).all(|(&s, &k)| s <= k as usize));
        let aug = add_ternary_rows(&a, 7, &spec, &mut rng).unwrap();
        prop_assert_eq!(aug.nrows(), a.nrows() + 7);
    }

    #[test]
    fn phi_fixed_anchor(d in 1u32..9, k in 3u32..10, q in prop::sample::select(vec![2u32, 3, 5])) {
        let spec = ModelSpec::new(DegreeDist::fixed(d), DegreeDist::fixed(k), q, None).unwrap();
        let p0 = phi(&spec, 0.0).unwrap();
        prop_assert!((p0 - (1.0 - d as f64 / k as f64)).abs() < 1e-12);
        prop_assert!(phi_max(&spec, 1000, 1e-9).value >= p0 - 1e-12);
    }

    #[test]
    fn size_biased_mean(mean in 0.5f64..6.0) {
        let d = DegreeDist::poisson(mean, 1e-12).unwrap();
        let s = d.size_biased().unwrap();
        prop_assert!((s.mean() - d.second_moment() / d.mean()).abs() < 1e-9);
    }

    #[test]
    fn matrix_market_roundtrip(a in small_matrix()) {
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf, &[]).unwrap();
        let back = SparseMatrix::read_matrix_market(buf.as_slice(), 2).unwrap();
        prop_assert_eq!(back, a);
    }
}
