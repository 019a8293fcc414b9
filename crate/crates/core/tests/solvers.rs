use std::sync::Arc;

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use sgfem_core::gpc::triple_products;
use sgfem_core::krylov::{
    cg, HierarchicalGaussSeidel, HierarchicalPartition, Identity, MeanBased, Preconditioner, PreconditionerKind,
};
use sgfem_core::sparse::{CsrMatrix, SkylineCholesky};
use sgfem_core::{GpcBasis, SgSystem};

/// Tridiagonal terms: an SPD mean and small symmetric fluctuations.
fn terms(n_x: usize, n_k: usize, scale: f64) -> Vec<CsrMatrix> {
    (0..n_k)
        .map(|l| {
            let mut t = Vec::new();
            for i in 0..n_x {
                let d = if l == 0 { 4.0 + 0.1 * i as f64 } else { scale * (1.0 + 0.05 * i as f64) / l as f64 };
                t.push((i, i, d));
                if i + 1 < n_x {
                    let v = if l == 0 { -1.0 } else { -0.3 * scale / l as f64 };
                    t.push((i, i + 1, v));
                    t.push((i + 1, i, v));
                }
            }
            CsrMatrix::from_triplets(n_x, &t).unwrap()
        })
        .collect()
}

struct Setup {
    basis: GpcBasis,
    system: Arc<SgSystem>,
    factor: Arc<SkylineCholesky>,
}

fn setup(dim: usize, p: usize, n_x: usize, scale: f64) -> Setup {
    let basis = GpcBasis::new(dim, p).unwrap();
    let n_k = basis.len();
    let tensor = Arc::new(triple_products(&basis, n_k).unwrap());
    let t = terms(n_x, n_k, scale);
    let factor = Arc::new(SkylineCholesky::factor(&t[0]).unwrap());
    let system = Arc::new(SgSystem::new(t, tensor).unwrap());
    Setup { basis, system, factor }
}

fn ahgs(s: &Setup) -> HierarchicalGaussSeidel {
    HierarchicalGaussSeidel::new(s.factor.clone(), s.system.clone(), HierarchicalPartition::new(&s.basis))
}

fn rhs(n: usize) -> Vec<f64> {
    (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect()
}

/// Dense symmetric block Gauss–Seidel over degree groups, each diagonal group
/// block replaced by `I ⊗ K_1`.
fn dense_sweep(s: &Setup, r: &[f64]) -> Vec<f64> {
    let n_x = s.system.n_x();
    let n = r.len();
    let a = DMatrix::from_fn(n, n, |i, j| s.system.to_dense()[i][j]);
    let k1 = DMatrix::from_fn(n_x, n_x, |i, j| s.system.terms()[0].get(i, j));
    let k1_inv = k1.try_inverse().unwrap();
    let groups = s.basis.degree_groups();
    let mut z = DVector::<f64>::zeros(n);
    let order: Vec<usize> = (0..groups.len()).chain((0..groups.len() - 1).rev()).collect();
    for g in order {
        let rows = groups[g].start * n_x..groups[g].end * n_x;
        for row_block in groups[g].clone() {
            let mut b = DVector::from_fn(n_x, |i, _| r[row_block * n_x + i]);
            for i in 0..n_x {
                let row = row_block * n_x + i;
                for j in 0..n {
                    if !rows.contains(&j) {
                        b[i] -= a[(row, j)] * z[j];
                    }
                }
            }
            let x = &k1_inv * b;
            for i in 0..n_x {
                z[row_block * n_x + i] = x[i];
            }
        }
    }
    z.iter().copied().collect()
}

#[test]
fn hierarchical_sweep_matches_dense_oracle() {
    for (dim, p) in [(1, 2), (2, 2), (3, 2)] {
        let s = setup(dim, p, 8, 0.4);
        let r = rhs(s.system.n_x() * s.system.n_xi());
        let mut z = vec![0.0; r.len()];
        ahgs(&s).apply(&r, &mut z);
        let oracle = dense_sweep(&s, &r);
        for (a, b) in z.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }
}

#[test]
fn sweep_visits_groups_forward_then_back() {
    let s = setup(2, 3, 4, 0.2);
    assert_eq!(ahgs(&s).sweep_order(), vec![0, 1, 2, 3, 2, 1, 0]);
}

#[test]
fn mean_based_solves_mean_only_system_in_one_iteration() {
    let basis = GpcBasis::new(2, 2).unwrap();
    let n_x = 8;
    let tensor = Arc::new(triple_products(&basis, basis.len()).unwrap());
    let mut t = terms(n_x, basis.len(), 0.0);
    let zero = CsrMatrix::zeros(t[0].pattern().clone());
    for m in t.iter_mut().skip(1) {
        *m = zero.clone();
    }
    let factor = Arc::new(SkylineCholesky::factor(&t[0]).unwrap());
    let system = SgSystem::new(t, tensor).unwrap();
    let mb = MeanBased::new(factor, basis.len());
    let b = rhs(n_x * basis.len());
    let (_, rep) = cg(&system, &mb, PreconditionerKind::MeanBased, &b, 1e-10, 50).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 1);
}

#[test]
fn hierarchical_with_degree_zero_is_mean_based() {
    let s = setup(2, 0, 8, 0.3);
    let r = rhs(8);
    let mut z1 = vec![0.0; 8];
    let mut z2 = vec![0.0; 8];
    ahgs(&s).apply(&r, &mut z1);
    MeanBased::new(s.factor.clone(), 1).apply(&r, &mut z2);
    for (a, b) in z1.iter().zip(&z2) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn preconditioners_are_symmetric() {
    let s = setup(2, 3, 6, 0.3);
    let n = s.system.n_x() * s.system.n_xi();
    let x = rhs(n);
    let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let pcs: Vec<Box<dyn Preconditioner>> = vec![Box::new(MeanBased::new(s.factor.clone(), s.basis.len())), Box::new(ahgs(&s))];
    for pc in &pcs {
        let (mut px, mut py) = (vec![0.0; n], vec![0.0; n]);
        pc.apply(&x, &mut px);
        pc.apply(&y, &mut py);
        let (a, b) = (dot(&y, &px), dot(&x, &py));
        assert_abs_diff_eq!(a, b, epsilon = 1e-10 * a.abs().max(1.0));
        assert!(dot(&x, &px) > 0.0);
    }
}

#[test]
fn iteration_counts_are_ordered() {
    let s = setup(2, 4, 12, 0.5);
    let n = s.system.n_x() * s.system.n_xi();
    let b = rhs(n);
    let mb = MeanBased::new(s.factor.clone(), s.basis.len());
    let hgs = ahgs(&s);
    let run = |pc: &dyn Preconditioner, kind| cg(s.system.as_ref(), pc, kind, &b, 1e-8, 1000).unwrap();
    let (x0, none) = run(&Identity, PreconditionerKind::None);
    let (x1, mean) = run(&mb, PreconditionerKind::MeanBased);
    let (x2, hier) = run(&hgs, PreconditionerKind::HierarchicalGaussSeidel);
    assert!(none.converged && mean.converged && hier.converged);
    assert!(hier.iterations <= mean.iterations, "{} > {}", hier.iterations, mean.iterations);
    assert!(mean.iterations <= none.iterations, "{} > {}", mean.iterations, none.iterations);
    let scale = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    for ((a, b), c) in x0.iter().zip(&x1).zip(&x2) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-6 * scale);
        assert_abs_diff_eq!(a, c, epsilon = 1e-6 * scale);
    }
}

#[test]
fn desk_beam_solves_keep_ordering() {
    use sgfem_core::benchmarks::desk_beam;
    use sgfem_core::quadrature::smolyak;
    use sgfem_core::{sg_newton_raphson, SgOptions};

    let bench = desk_beam(0.1).unwrap();
    let basis = GpcBasis::new(1, 4).unwrap();
    let rule = smolyak(1, 4).unwrap();
    let options = SgOptions {
        shadows: vec![PreconditionerKind::MeanBased, PreconditionerKind::None],
        ..Default::default()
    };
    let h = sg_newton_raphson(&bench.model, &bench.program, &basis, &rule, &options, &bench.observables).unwrap();
    assert!(h.failure.is_none());
    for inc in &h.increments {
        for step in &inc.solves {
            let [hier, mean, none] = &step.reports[..] else {
                panic!("three reports per step");
            };
            assert!(hier.converged && mean.converged && none.converged);
            assert!(hier.iterations <= mean.iterations && mean.iterations <= none.iterations);
            if inc.cracked_points == 0 {
                assert!(hier.history.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }
}
