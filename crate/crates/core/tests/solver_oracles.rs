use biorth::mop::{dual_conditions, dual_prefactor};
use biorth::oracle::biorth_pair_from_bimoments;
use biorth::rh::{default_det_points, verify_det, verify_zeros};
use biorth::{DualRow, MomentSet, MopSolution, Polynomial, ProblemSpec, YMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn reference_spec(k: usize) -> ProblemSpec {
    ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 1.0], 0.5, k).unwrap()
}

fn spec_grid(k: usize) -> Vec<ProblemSpec> {
    vec![
        reference_spec(k),
        ProblemSpec::from_coeffs(vec![0.0, 0.3, 1.0], vec![0.0, 0.0, -0.5, 0.2, 1.0], 0.4, k).unwrap(),
        ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0, 0.0, 0.25], vec![0.0, 0.0, 0.0, 0.0, 1.0], -0.6, k).unwrap(),
        ProblemSpec::from_coeffs(vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], 0.5, k).unwrap(),
    ]
}

/// Null vector of the homogeneous dual system from the last column of a
/// Householder QR of `[A^T | 0]`, after column scaling.
fn qr_dual(m: &MomentSet, j: usize) -> Polynomial {
    let spec = m.spec();
    let k = spec.k();
    let n = spec.multi_index();
    let conds = dual_conditions(&n, j);
    let a = DMatrix::from_fn(conds.len(), k, |r, c| {
        let (i, jj) = conds[r];
        m.mixed(i + c, jj)
    });
    let colscale: Vec<f64> = (0..k).map(|c| 1.0 / a.column(c).amax()).collect();
    let mut at = DMatrix::zeros(k, k);
    for r in 0..conds.len() {
        for c in 0..k {
            at[(c, r)] = a[(r, c)] * colscale[c];
        }
    }
    let q = at.qr().q();
    let coeffs: Vec<f64> = (0..k).map(|c| q[(c, k - 1)] * colscale[c]).collect();
    let raw = Polynomial::new(coeffs);
    let nu: f64 = raw
        .coeffs()
        .iter()
        .enumerate()
        .map(|(c, &rc)| rc * m.mixed(n[j] - 1 + c, j))
        .sum();
    raw.scale(1.0 / nu)
}

#[test]
fn duals_match_qr_null_space() {
    for spec in spec_grid(4) {
        let m = MomentSet::compute(&spec).unwrap();
        let sol = MopSolution::solve(&m).unwrap();
        for (j, dual) in sol.duals.iter().enumerate() {
            let DualRow::Normalized { r, prefactor } = dual else {
                assert_eq!(spec.multi_index()[j], 0);
                continue;
            };
            assert_eq!(*prefactor, dual_prefactor());
            let oracle = qr_dual(&m, j);
            let err = r.relative_distance(&oracle);
            assert!(err < 1e-8, "dual {j} err {err:e}: {r} vs {oracle}");
        }
    }
}

#[test]
fn multiple_orthogonality_matches_gram_route_on_spec_grid() {
    for k in 0..=6 {
        for spec in spec_grid(k) {
            let m = MomentSet::compute(&spec).unwrap();
            let sol = MopSolution::solve(&m).unwrap();
            let (p, _) = biorth_pair_from_bimoments(&m, k).unwrap();
            assert!(sol.pk.is_monic() && sol.pk.degree() == Some(k));
            let err = sol.pk.relative_distance(&p);
            assert!(err < 1e-8, "k={k} tau={} err {err:e}", spec.tau());
        }
    }
}

#[test]
fn constant_shift_of_v_leaves_pk_unchanged() {
    for k in [3, 6] {
        let base = reference_spec(k);
        let shifted = ProblemSpec::from_coeffs(vec![1.7, 0.0, 1.0], vec![0.0, 0.0, 0.0, 0.0, 1.0], 0.5, k).unwrap();
        let p = MopSolution::solve(&MomentSet::compute(&base).unwrap()).unwrap().pk;
        let q = MopSolution::solve(&MomentSet::compute(&shifted).unwrap()).unwrap().pk;
        assert!(p.relative_distance(&q) < 1e-10, "k={k}: {p} vs {q}");
    }
}

/// `(1/2 pi i) int int f(x) y^j exp(-V - W + 2 tau x y) / (x - z) dx dy` by a
/// 2-D trapezoid sum, valid for reference-problem densities with `|Im z| >= 1`.
fn brute_cauchy(f: &Polynomial, j: usize, z: Complex64) -> Complex64 {
    let h = 0.02;
    let n = 800;
    let node = |i: usize| -8.0 + i as f64 * h;
    let mut total = Complex64::new(0.0, 0.0);
    for ix in 0..=n {
        let x = node(ix);
        let mut inner = 0.0;
        for iy in 0..=n {
            let y = node(iy);
            inner += y.powi(j as i32) * (-x * x - y.powi(4) + x * y).exp();
        }
        total += f.eval(x) * inner * h / (x - z);
    }
    total * h / Complex64::new(0.0, 2.0 * std::f64::consts::PI)
}

#[test]
fn assembled_matrix_matches_independent_reassembly() {
    let spec = reference_spec(3);
    let m = MomentSet::compute(&spec).unwrap();
    let sol = MopSolution::solve(&m).unwrap();
    let y = YMatrix::assemble(&sol, &m).unwrap();
    let z = Complex64::new(1.0, 1.0);
    let got = y.eval(z).unwrap();

    let (p, _) = biorth_pair_from_bimoments(&m, 3).unwrap();
    let mut rows = vec![(p, Complex64::new(1.0, 0.0))];
    for j in 0..spec.d() - 1 {
        rows.push((qr_dual(&m, j), Complex64::new(0.0, -2.0 * std::f64::consts::PI)));
    }
    for (a, (poly, pre)) in rows.iter().enumerate() {
        let mut expected = vec![pre * poly.eval_complex(z)];
        for b in 0..spec.d() - 1 {
            expected.push(pre * brute_cauchy(poly, b, z));
        }
        let scale = expected.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (b, e) in expected.iter().enumerate() {
            let err = (got[(a, b)] - e).norm() / scale;
            assert!(err < 1e-8, "Y[{a}][{b}] = {} vs {e}, err {err:e}", got[(a, b)]);
        }
    }
}

#[test]
fn corrupted_dual_row_breaks_determinant() {
    let spec = reference_spec(3);
    let m = MomentSet::compute(&spec).unwrap();
    let y = YMatrix::assemble(&MopSolution::solve(&m).unwrap(), &m).unwrap();
    let pts = default_det_points();
    assert!(verify_det(&y, &pts).unwrap() < 1e-6);
    for row in 1..spec.d() {
        assert!(verify_det(&y.with_scaled_row(row, 1.01), &pts).unwrap() > 1e-3);
    }
}

/// Real roots by sign changes on a fine grid refined by bisection.
fn sign_change_roots(p: &Polynomial, lo: f64, hi: f64) -> Vec<f64> {
    let n = 20_000;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut roots = Vec::new();
    for w in xs.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (p.eval(a), p.eval(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa * fb > 0.0 {
            continue;
        }
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if c == a || c == b {
                break;
            }
            if p.eval(a) * p.eval(c) <= 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

#[test]
fn zeros_are_real_simple_and_interlace() {
    let solve = |k| MopSolution::solve(&MomentSet::compute(&reference_spec(k)).unwrap()).unwrap().pk;
    let p6 = solve(6);
    let p5 = solve(5);
    let z6 = verify_zeros(&p6);
    assert!(z6.all_real() && z6.simple(), "{z6:?}");
    let oracle = sign_change_roots(&p6, -10.0, 10.0);
    assert_eq!(oracle.len(), 6);
    for (r, o) in z6.real_roots().iter().zip(&oracle) {
        assert!((r - o).abs() < 1e-8, "{r} vs {o}");
    }
    let z5 = verify_zeros(&p5).real_roots();
    let r6 = z6.real_roots();
    let interlaced = (0..5).all(|i| r6[i] < z5[i] && z5[i] < r6[i + 1]);
    eprintln!("zeros k=5 {z5:?}\nzeros k=6 {r6:?}\ninterlacing observed: {interlaced}");
}

#[test]
fn even_second_degree_zeros_are_symmetric() {
    let p2 = MopSolution::solve(&MomentSet::compute(&reference_spec(2)).unwrap()).unwrap().pk;
    let z = verify_zeros(&p2).real_roots();
    assert!(z[1] > 0.0);
    assert!((z[0] + z[1]).abs() < 1e-9);
}
