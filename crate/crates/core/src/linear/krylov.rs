//! Linear algebra for the implicit step `(I - c L) u = b`.

/// Solves the cyclic tridiagonal system with sub-diagonal `lower`, diagonal
/// `diag` and super-diagonal `upper`. `lower[0]` couples row 0 to the last
/// unknown and `upper[n-1]` couples the last row to unknown 0.
pub fn solve_cyclic_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let beta = lower[0];
    let alpha = upper[n - 1];
    if alpha == 0.0 && beta == 0.0 {
        return thomas(lower, diag, upper, rhs);
    }
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = thomas(lower, &bb, upper, rhs);
    let mut e = vec![0.0; n];
    e[0] = gamma;
    e[n - 1] = alpha;
    let z = thomas(lower, &bb, upper, &e);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Non-cyclic tridiagonal solve; `lower[0]` and `upper[n-1]` are ignored.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut b = diag[0];
    x[0] = rhs[0] / b;
    for i in 1..n {
        c[i] = upper[i - 1] / b;
        b = diag[i] - lower[i] * c[i];
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / b;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i + 1] * x[i + 1];
    }
    x
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients starting from `x`.
pub fn pcg(apply: impl Fn(&[f64]) -> Vec<f64>, diag: &[f64], b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> KrylovOutcome {
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = norm(&r) / bn;
    let mut it = 0;
    while rel > tol && it < max_iter {
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / bn;
        it += 1;
        if rel <= tol {
            break;
        }
        for i in 0..z.len() {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    KrylovOutcome { iterations: it, relative_residual: rel, converged: rel <= tol }
}

/// Right-preconditioned BiCGSTAB for the non-symmetric stencil produced by
/// cross-derivative terms.
pub fn bicgstab(apply: impl Fn(&[f64]) -> Vec<f64>, diag: &[f64], b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> KrylovOutcome {
    let n = b.len();
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome { iterations: 0, relative_residual: 0.0, converged: true };
    }
    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut rel = norm(&r) / bn;
    let mut it = 0;
    while rel > tol && it < max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y: Vec<f64> = p.iter().zip(diag).map(|(pi, d)| pi / d).collect();
        v = apply(&y);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        it += 1;
        if norm(&s) / bn <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            r = s;
            rel = norm(&r) / bn;
            break;
        }
        let zs: Vec<f64> = s.iter().zip(diag).map(|(si, d)| si / d).collect();
        let t = apply(&zs);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zs[i];
            r[i] = s[i] - omega * t[i];
        }
        rel = norm(&r) / bn;
    }
    KrylovOutcome { iterations: it, relative_residual: rel, converged: rel <= tol }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_cyclic(lower: &[f64], diag: &[f64], upper: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| lower[i] * x[(i + n - 1) % n] + diag[i] * x[i] + upper[i] * x[(i + 1) % n])
            .collect()
    }

    #[test]
    fn cyclic_solve_inverts_product() {
        let n = 9;
        let lower: Vec<f64> = (0..n).map(|i| -0.3 - 0.01 * i as f64).collect();
        let upper: Vec<f64> = (0..n).map(|i| -0.2 - 0.02 * i as f64).collect();
        let diag = vec![1.7; n];
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let b = dense_cyclic(&lower, &diag, &upper, &x);
        let y = solve_cyclic_tridiagonal(&lower, &diag, &upper, &b);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn krylov_solvers_agree_with_tridiagonal() {
        let n = 16;
        let lower = vec![-0.4; n];
        let upper = vec![-0.4; n];
        let diag = vec![2.0; n];
        let x: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).sin()).collect();
        let b = dense_cyclic(&lower, &diag, &upper, &x);
        let apply = |v: &[f64]| dense_cyclic(&lower, &diag, &upper, v);
        let mut y = vec![0.0; n];
        assert!(pcg(apply, &diag, &b, &mut y, 1e-13, 100).converged);
        let mut w = vec![0.0; n];
        assert!(bicgstab(apply, &diag, &b, &mut w, 1e-13, 100).converged);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-11);
            assert!((x[i] - w[i]).abs() < 1e-11);
        }
    }
}
